#include "masc/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "masc/parallel.hpp"

namespace masc {

LooResult leave_one_out(const PanelDataset& dataset, const EstimationConfig& config,
                        const std::set<EffectKind>& effect_targets, int jobs) {
  if (config.donors.size() < 3) {
    throw Error(ErrorCode::DonorPoolTooSmall,
                "leave-one-out needs at least 3 donors so every variant keeps 2");
  }
  const std::string& treated = config.treated.front();
  const EstimationSettings settings = settings_from(config);

  LooResult result;
  const MascRun baseline = run_masc(dataset, treated, config.donors, config.specs, settings, false);
  result.baseline = baseline.effects;

  std::vector<LooVariant> variants(config.donors.size());
  parallel_for(config.donors.size(), jobs, [&](std::size_t i) {
    std::vector<std::string> pool;
    pool.reserve(config.donors.size() - 1);
    for (std::size_t j = 0; j < config.donors.size(); ++j) {
      if (j != i) pool.push_back(config.donors[j]);
    }
    try {
      const MascRun run = run_masc(dataset, treated, pool, config.specs, settings, false);
      variants[i].effects = run.effects;
    } catch (const std::exception& error) {
      variants[i].failed = true;
      variants[i].error = error.what();
    }
  });

  for (const EffectKind effect : effect_targets) result.max_abs_deviation[effect] = 0.0;
  for (std::size_t i = 0; i < config.donors.size(); ++i) {
    if (variants[i].failed) {
      result.warnings.push_back({"LooVariantFailed", "excluding '" + config.donors[i] +
                                                         "' failed: " + variants[i].error});
    } else {
      for (const EffectKind effect : effect_targets) {
        const Eigen::VectorXd* variant_series = nullptr;
        const Eigen::VectorXd* baseline_series = nullptr;
        switch (effect) {
          case EffectKind::Total:
            variant_series = &variants[i].effects.total;
            baseline_series = &result.baseline.total;
            break;
          case EffectKind::Direct:
            variant_series = &variants[i].effects.direct;
            baseline_series = &result.baseline.direct;
            break;
          case EffectKind::Indirect:
            variant_series = &variants[i].effects.indirect;
            baseline_series = &result.baseline.indirect;
            break;
        }
        const double deviation = (*variant_series - *baseline_series).cwiseAbs().maxCoeff();
        result.max_abs_deviation[effect] = std::max(result.max_abs_deviation[effect], deviation);
      }
    }
    result.variants.emplace(config.donors[i], std::move(variants[i]));
  }
  return result;
}

}  // namespace masc
