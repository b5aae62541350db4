#include "masc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "masc/parallel.hpp"
#include "masc/random.hpp"

namespace masc {

namespace {

constexpr double kPerfectFitTol = 1e-12;

double normalized_gap(double gap, double pre_rmspe) {
  if (pre_rmspe < kPerfectFitTol) {
    return std::abs(gap) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return std::abs(gap) / pre_rmspe;
}

std::vector<std::string> without(const std::vector<std::string>& pool, const std::string& unit) {
  std::vector<std::string> out;
  out.reserve(pool.size());
  for (const auto& candidate : pool) {
    if (candidate != unit) out.push_back(candidate);
  }
  return out;
}

}  // namespace

const char* effect_name(EffectKind effect) {
  switch (effect) {
    case EffectKind::Total: return "total";
    case EffectKind::Direct: return "direct";
    case EffectKind::Indirect: return "indirect";
  }
  return "?";
}

double rmspe(const Eigen::VectorXd& actual, const Eigen::VectorXd& synthetic,
             std::size_t window_first, std::size_t window_last) {
  if (actual.size() != synthetic.size()) {
    throw Error(ErrorCode::PeriodMisalignment, "series lengths differ");
  }
  if (window_first > window_last ||
      window_last >= static_cast<std::size_t>(actual.size())) {
    throw Error(ErrorCode::EmptyWindow, "RMSPE window is empty or out of range");
  }
  double ss = 0.0;
  for (std::size_t t = window_first; t <= window_last; ++t) {
    const double gap = actual(static_cast<Eigen::Index>(t)) - synthetic(static_cast<Eigen::Index>(t));
    ss += gap * gap;
  }
  return std::sqrt(ss / static_cast<double>(window_last - window_first + 1));
}

RatioStatistic ratio_statistic(double pre_rmspe, double post_rmspe) {
  RatioStatistic stat;
  if (pre_rmspe < kPerfectFitTol) {
    stat.value = std::numeric_limits<double>::infinity();
    stat.perfect_pre_fit = true;
    return stat;
  }
  stat.value = post_rmspe / pre_rmspe;
  return stat;
}

Eigen::VectorXd effect_gap_series(const PanelDataset& dataset, const MascRun& run,
                                  EffectKind effect) {
  const auto u = dataset.unit_index(run.treated);
  if (!u) throw Error(ErrorCode::UnknownUnit, run.treated);
  const Eigen::VectorXd observed =
      dataset.outcome.row(static_cast<Eigen::Index>(*u)).transpose();
  switch (effect) {
    case EffectKind::Total:
      return observed - run.y00.values;
    case EffectKind::Direct:
      return observed - run.y01.values;
    case EffectKind::Indirect:
      return run.y01.values - run.y00.values;
  }
  throw Error(ErrorCode::DimensionMismatch, "bad effect kind");
}

PlaceboResult placebo_test(const PanelDataset& dataset, const EstimationConfig& config,
                           const std::set<EffectKind>& effect_targets, int jobs) {
  if (config.donors.size() < 2) {
    throw Error(ErrorCode::DonorPoolTooSmall, "placebo test needs at least 2 donors");
  }
  if (effect_targets.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "no effect targets requested");
  }
  const std::string& treated = config.treated.front();
  const EstimationSettings settings = settings_from(config);

  struct UnitRun {
    bool ok = false;
    std::string error;
    MascRun run;
  };
  const std::size_t n_placebo = config.donors.size();
  std::vector<UnitRun> runs(n_placebo + 1);

  // Slot 0 is the true treated unit; placebo units follow in donor order.
  parallel_for(n_placebo + 1, jobs, [&](std::size_t slot) {
    const std::string unit = slot == 0 ? treated : config.donors[slot - 1];
    const std::vector<std::string> pool =
        slot == 0 ? config.donors : without(config.donors, unit);
    try {
      runs[slot].run = run_masc(dataset, unit, pool, config.specs, settings, false);
      runs[slot].ok = true;
    } catch (const std::exception& error) {
      runs[slot].error = error.what();
    }
  });

  if (!runs[0].ok) {
    throw Error(ErrorCode::NonConvergence, "estimation for the treated unit failed: " + runs[0].error);
  }

  PlaceboResult result;
  const std::size_t t_star = dataset.intervention_index();
  const std::size_t n_periods = dataset.n_periods();
  result.post_periods = runs[0].run.post_periods;

  int succeeded = 0;
  for (std::size_t slot = 1; slot <= n_placebo; ++slot) {
    if (runs[slot].ok) {
      ++succeeded;
    } else {
      result.dropped_donors.push_back(config.donors[slot - 1]);
      result.warnings.push_back({"PlaceboDropped", "placebo run for '" + config.donors[slot - 1] +
                                                       "' failed: " + runs[slot].error});
    }
  }
  result.denominator =
      succeeded + (config.inference.pvalue_denominator == PValueDenominator::DonorsPlusOne ? 1 : 0);

  for (const EffectKind effect : effect_targets) {
    auto& stats_by_unit = result.per_unit_stats[effect];
    auto& gaps_by_unit = result.normalized_gaps[effect];

    auto unit_entry = [&](const UnitRun& unit_run, const std::string& unit) {
      const Eigen::VectorXd gaps = effect_gap_series(dataset, unit_run.run, effect);
      UnitPlaceboStats stats;
      stats.pre_rmspe = std::sqrt(gaps.head(static_cast<Eigen::Index>(t_star)).squaredNorm() /
                                  static_cast<double>(t_star));
      stats.post_rmspe =
          std::sqrt(gaps.tail(static_cast<Eigen::Index>(n_periods - t_star)).squaredNorm() /
                    static_cast<double>(n_periods - t_star));
      const RatioStatistic ratio = ratio_statistic(stats.pre_rmspe, stats.post_rmspe);
      stats.ratio = ratio.value;
      stats.perfect_pre_fit = ratio.perfect_pre_fit;
      stats_by_unit[unit] = stats;

      Eigen::VectorXd normalized(static_cast<Eigen::Index>(n_periods - t_star));
      for (std::size_t t = t_star; t < n_periods; ++t) {
        normalized(static_cast<Eigen::Index>(t - t_star)) =
            normalized_gap(gaps(static_cast<Eigen::Index>(t)), stats.pre_rmspe);
      }
      gaps_by_unit[unit] = std::move(normalized);
      return stats;
    };

    const UnitPlaceboStats treated_stats = unit_entry(runs[0], treated);
    int ratio_exceedances = 0;
    for (std::size_t slot = 1; slot <= n_placebo; ++slot) {
      if (!runs[slot].ok) continue;
      const UnitPlaceboStats stats = unit_entry(runs[slot], config.donors[slot - 1]);
      if (stats.ratio >= treated_stats.ratio) ++ratio_exceedances;
    }
    result.p_overall[effect] =
        static_cast<double>(ratio_exceedances) / static_cast<double>(result.denominator);

    auto& per_period = result.p_per_period[effect];
    const Eigen::VectorXd& treated_gaps = gaps_by_unit[treated];
    for (std::size_t i = 0; i < result.post_periods.size(); ++i) {
      int exceedances = 0;
      for (std::size_t slot = 1; slot <= n_placebo; ++slot) {
        if (!runs[slot].ok) continue;
        const Eigen::VectorXd& gaps = gaps_by_unit[config.donors[slot - 1]];
        if (gaps(static_cast<Eigen::Index>(i)) >= treated_gaps(static_cast<Eigen::Index>(i))) {
          ++exceedances;
        }
      }
      per_period[result.post_periods[i]] =
          static_cast<double>(exceedances) / static_cast<double>(result.denominator);
    }
  }
  return result;
}

namespace {

void check_baseline(const EstimationConfig& config, const std::vector<MascRun>& baseline) {
  if (baseline.empty() || baseline.size() != config.treated.size()) {
    throw Error(ErrorCode::NotEstimated, "resampling needs one baseline MASC run per treated unit");
  }
  for (const auto& run : baseline) {
    if (run.m0.values.size() == 0) {
      throw Error(ErrorCode::NotEstimated,
                  "baseline run for '" + run.treated + "' lacks the counterfactual mediator");
    }
  }
}

}  // namespace

PanelDataset detreat_panel(const PanelDataset& dataset, const EstimationConfig& config,
                           const std::vector<MascRun>& baseline) {
  check_baseline(config, baseline);
  const std::size_t n_treated = config.treated.size();
  const std::size_t t_star = dataset.intervention_index();
  const std::size_t n_post = dataset.n_periods() - t_star;

  Eigen::VectorXd alpha_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
  Eigen::VectorXd mediator_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
  for (std::size_t i = 0; i < n_treated; ++i) {
    const auto u = dataset.unit_index(config.treated[i]);
    if (!u) throw Error(ErrorCode::UnknownUnit, config.treated[i]);
    alpha_bar += baseline[i].effects.total;
    for (std::size_t t = 0; t < n_post; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(t_star + t);
      mediator_bar(static_cast<Eigen::Index>(t)) +=
          dataset.mediator(static_cast<Eigen::Index>(*u), col) - baseline[i].m0.values(col);
    }
  }
  alpha_bar /= static_cast<double>(n_treated);
  mediator_bar /= static_cast<double>(n_treated);

  PanelDataset detreated = dataset;
  for (std::size_t i = 0; i < n_treated; ++i) {
    const auto u = dataset.unit_index(config.treated[i]);
    for (std::size_t t = 0; t < n_post; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(t_star + t);
      detreated.outcome(static_cast<Eigen::Index>(*u), col) -= alpha_bar(static_cast<Eigen::Index>(t));
      detreated.mediator(static_cast<Eigen::Index>(*u), col) -=
          mediator_bar(static_cast<Eigen::Index>(t));
    }
  }
  return detreated;
}

ResamplingResult resampling_inference(const PanelDataset& dataset, const EstimationConfig& config,
                                      const std::vector<MascRun>& baseline, int n_iter,
                                      std::uint64_t seed, int jobs) {
  check_baseline(config, baseline);
  std::vector<std::string> all_units = config.treated;
  all_units.insert(all_units.end(), config.donors.begin(), config.donors.end());
  const std::size_t n_treated = config.treated.size();
  if (all_units.size() < n_treated + 2) {
    throw Error(ErrorCode::InsufficientUnits,
                "resampling needs at least two non-treated units in the pool");
  }

  const std::size_t t_star = dataset.intervention_index();
  const std::size_t n_post = dataset.n_periods() - t_star;

  const PanelDataset detreated = detreat_panel(dataset, config, baseline);

  Eigen::VectorXd alpha_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
  Eigen::VectorXd theta_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
  for (std::size_t i = 0; i < n_treated; ++i) {
    alpha_bar += baseline[i].effects.total;
    theta_bar += baseline[i].effects.direct;
  }
  alpha_bar /= static_cast<double>(n_treated);
  theta_bar /= static_cast<double>(n_treated);

  ResamplingResult result;
  result.n_iter = n_iter;
  result.seed = seed;
  result.observed.post_periods = baseline.front().post_periods;
  result.observed.total = alpha_bar;
  result.observed.direct = theta_bar;
  result.observed.indirect = alpha_bar - theta_bar;

  const EstimationSettings settings = settings_from(config);
  result.draws.resize(static_cast<std::size_t>(n_iter));

  parallel_for(static_cast<std::size_t>(n_iter), jobs, [&](std::size_t iter) {
    Rng rng(derive_seed(seed, iter));
    const std::vector<std::size_t> chosen =
        rng.sample_without_replacement(all_units.size(), n_treated);
    std::vector<std::string> pseudo_treated;
    pseudo_treated.reserve(n_treated);
    for (const std::size_t index : chosen) pseudo_treated.push_back(all_units[index]);
    std::vector<std::string> pool;
    pool.reserve(all_units.size() - n_treated);
    for (const auto& unit : all_units) {
      if (std::find(pseudo_treated.begin(), pseudo_treated.end(), unit) == pseudo_treated.end()) {
        pool.push_back(unit);
      }
    }

    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_post));
    for (const auto& unit : pseudo_treated) {
      const MascRun run = run_masc(detreated, unit, pool, config.specs, settings, false);
      total += run.effects.total;
      direct += run.effects.direct;
    }
    total /= static_cast<double>(n_treated);
    direct /= static_cast<double>(n_treated);

    EffectSeries draw;
    draw.post_periods = result.observed.post_periods;
    draw.total = total;
    draw.direct = direct;
    draw.indirect = total - direct;
    result.draws[iter] = std::move(draw);
  });

  for (const EffectKind effect : {EffectKind::Total, EffectKind::Direct, EffectKind::Indirect}) {
    auto series_of = [&](const EffectSeries& s) -> const Eigen::VectorXd& {
      switch (effect) {
        case EffectKind::Total: return s.total;
        case EffectKind::Direct: return s.direct;
        case EffectKind::Indirect: return s.indirect;
      }
      return s.total;
    };
    auto& p_map = result.p_values[effect];
    const Eigen::VectorXd& observed = series_of(result.observed);
    for (std::size_t t = 0; t < n_post; ++t) {
      int exceedances = 0;
      for (const auto& draw : result.draws) {
        const double value = series_of(draw)(static_cast<Eigen::Index>(t));
        if (std::abs(value) >= std::abs(observed(static_cast<Eigen::Index>(t)))) ++exceedances;
      }
      p_map[result.observed.post_periods[t]] =
          static_cast<double>(exceedances) / static_cast<double>(n_iter);
    }
  }
  return result;
}

}  // namespace masc
