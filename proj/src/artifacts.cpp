#include "masc/artifacts.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "masc/text.hpp"

namespace masc {

namespace {

using nlohmann::json;

json weight_vector_json(const WeightVector& weights) {
  json out = json::object();
  for (std::size_t d = 0; d < weights.donor_ids.size(); ++d) {
    out[weights.donor_ids[d]] = weights.weights(static_cast<Eigen::Index>(d));
  }
  return out;
}

json synthetic_series_json(const SyntheticSeries& series) {
  json weights = json::object();
  for (const auto& [period, vector] : series.weights_by_period) {
    weights[period] = weight_vector_json(vector);
  }
  return json{{"pre_fit_rmspe", series.pre_fit_rmspe}, {"weights", std::move(weights)}};
}

double post_rmspe_of(const PanelDataset& dataset, const MascRun& run,
                     const SyntheticSeries& series, bool mediator) {
  const auto u = dataset.unit_index(run.treated);
  const std::size_t t_star = dataset.intervention_index();
  const Eigen::MatrixXd& observed = mediator ? dataset.mediator : dataset.outcome;
  return rmspe(observed.row(static_cast<Eigen::Index>(*u)).transpose(), series.values, t_star,
               dataset.n_periods() - 1);
}

}  // namespace

std::string effects_csv(const EffectSeries& effects) {
  std::string out = "period,total,direct,indirect\n";
  for (std::size_t t = 0; t < effects.post_periods.size(); ++t) {
    const Eigen::Index i = static_cast<Eigen::Index>(t);
    out += std::to_string(effects.post_periods[t]) + ',' + format_sig6(effects.total(i)) + ',' +
           format_sig6(effects.direct(i)) + ',' + format_sig6(effects.indirect(i)) + '\n';
  }
  return out;
}

std::string effects_csv_with_pvalues(
    const EffectSeries& effects,
    const std::map<EffectKind, std::map<int, double>>& p_per_period) {
  std::string out = "period,total,direct,indirect,p_total,p_direct,p_indirect\n";
  auto p_of = [&](EffectKind effect, int period) -> std::string {
    const auto by_effect = p_per_period.find(effect);
    if (by_effect == p_per_period.end()) return "";
    const auto by_period = by_effect->second.find(period);
    if (by_period == by_effect->second.end()) return "";
    return format_sig6(by_period->second);
  };
  for (std::size_t t = 0; t < effects.post_periods.size(); ++t) {
    const Eigen::Index i = static_cast<Eigen::Index>(t);
    const int period = effects.post_periods[t];
    out += std::to_string(period) + ',' + format_sig6(effects.total(i)) + ',' +
           format_sig6(effects.direct(i)) + ',' + format_sig6(effects.indirect(i)) + ',' +
           p_of(EffectKind::Total, period) + ',' + p_of(EffectKind::Direct, period) + ',' +
           p_of(EffectKind::Indirect, period) + '\n';
  }
  return out;
}

std::string series_csv(const PanelDataset& dataset, const MascRun& run) {
  const auto u = dataset.unit_index(run.treated);
  if (!u) throw Error(ErrorCode::UnknownUnit, run.treated);
  std::string out = "period,observed_y,synthetic_y00,synthetic_y01\n";
  for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
    const Eigen::Index i = static_cast<Eigen::Index>(t);
    out += std::to_string(dataset.periods[t]) + ',' +
           format_sig6(dataset.outcome(static_cast<Eigen::Index>(*u), i)) + ',' +
           format_sig6(run.y00.values(i)) + ',' + format_sig6(run.y01.values(i)) + '\n';
  }
  return out;
}

std::string weights_json(const MascRun& run) {
  json out;
  out["treated"] = run.treated;
  out["y00"] = synthetic_series_json(run.y00);
  out["y00"]["objective"] = run.total_report.objective;
  out["y00"]["converged"] = run.total_report.converged;
  out["y01"] = synthetic_series_json(run.y01);
  json per_period = json::object();
  for (const auto& [period, report] : run.direct_reports) {
    per_period[std::to_string(period)] = {{"objective", report.objective},
                                          {"converged", report.converged}};
  }
  out["y01"]["solves"] = std::move(per_period);
  if (run.m0.values.size() > 0) {
    out["m0"] = synthetic_series_json(run.m0);
    out["m0"]["objective"] = run.mediator_report.objective;
    out["m0"]["converged"] = run.mediator_report.converged;
  }
  return out.dump(2) + "\n";
}

std::string fit_json(const PanelDataset& dataset, const MascRun& run) {
  json out;
  out["treated"] = run.treated;
  out["y00"] = {{"pre_rmspe", run.y00.pre_fit_rmspe},
                {"post_rmspe", post_rmspe_of(dataset, run, run.y00, false)}};
  out["y01"] = {{"pre_rmspe", run.y01.pre_fit_rmspe},
                {"post_rmspe", post_rmspe_of(dataset, run, run.y01, false)}};
  if (run.m0.values.size() > 0) {
    out["m0"] = {{"pre_rmspe", run.m0.pre_fit_rmspe},
                 {"post_rmspe", post_rmspe_of(dataset, run, run.m0, true)}};
  }
  json warnings = json::array();
  for (const auto& warning : run.warnings) {
    warnings.push_back({{"code", warning.code}, {"message", warning.message}});
  }
  out["warnings"] = std::move(warnings);
  return out.dump(2) + "\n";
}

std::string placebo_stats_csv(const PlaceboResult& placebo, const std::string& treated) {
  std::string out =
      "effect,unit,is_treated,pre_rmspe,post_rmspe,ratio,perfect_pre_fit,p_overall,p_display\n";
  for (const auto& [effect, by_unit] : placebo.per_unit_stats) {
    const double p = placebo.p_overall.at(effect);
    for (const auto& [unit, stats] : by_unit) {
      const bool is_treated = unit == treated;
      out += std::string(effect_name(effect)) + ',' + unit + ',' + (is_treated ? "1" : "0") + ',' +
             format_sig6(stats.pre_rmspe) + ',' + format_sig6(stats.post_rmspe) + ',' +
             (std::isinf(stats.ratio) ? "inf" : format_sig6(stats.ratio)) + ',' +
             (stats.perfect_pre_fit ? "1" : "0") + ',';
      if (is_treated) {
        out += format_sig6(p);
        out += ',';
        out += p == 0.0 ? "<1/" + std::to_string(placebo.denominator) : format_sig6(p);
      } else {
        out += ',';
      }
      out += '\n';
    }
  }
  return out;
}

std::string loo_summary_csv(const LooResult& loo) {
  std::string out = "excluded_donor,effect,max_abs_deviation,failed\n";
  for (const auto& [donor, variant] : loo.variants) {
    for (const auto& [effect, overall] : loo.max_abs_deviation) {
      if (variant.failed) {
        out += donor + ',' + effect_name(effect) + ",,1\n";
        continue;
      }
      const Eigen::VectorXd* variant_series = nullptr;
      const Eigen::VectorXd* baseline_series = nullptr;
      switch (effect) {
        case EffectKind::Total:
          variant_series = &variant.effects.total;
          baseline_series = &loo.baseline.total;
          break;
        case EffectKind::Direct:
          variant_series = &variant.effects.direct;
          baseline_series = &loo.baseline.direct;
          break;
        case EffectKind::Indirect:
          variant_series = &variant.effects.indirect;
          baseline_series = &loo.baseline.indirect;
          break;
      }
      const double deviation = (*variant_series - *baseline_series).cwiseAbs().maxCoeff();
      out += donor + ',' + effect_name(effect) + ',' + format_sig6(deviation) + ",0\n";
    }
  }
  for (const auto& [effect, deviation] : loo.max_abs_deviation) {
    out += std::string("(overall),") + effect_name(effect) + ',' + format_sig6(deviation) + ",0\n";
  }
  return out;
}

std::string ground_truth_csv(const GroundTruth& truth) {
  std::string out =
      "unit,period,m0,m1,y00,y01,y10,y11,alpha,theta_m1,delta0,delta1,theta_m0\n";
  for (std::size_t i = 0; i < truth.treated_units.size(); ++i) {
    for (std::size_t t = 0; t < truth.post_periods.size(); ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const Eigen::Index c = static_cast<Eigen::Index>(t);
      out += truth.treated_units[i] + ',' + std::to_string(truth.post_periods[t]) + ',' +
             format_roundtrip(truth.m0(r, c)) + ',' + format_roundtrip(truth.m1(r, c)) + ',' +
             format_roundtrip(truth.y00(r, c)) + ',' + format_roundtrip(truth.y01(r, c)) + ',' +
             format_roundtrip(truth.y10(r, c)) + ',' + format_roundtrip(truth.y11(r, c)) + ',' +
             format_roundtrip(truth.alpha(r, c)) + ',' + format_roundtrip(truth.theta_m1(r, c)) +
             ',' + format_roundtrip(truth.delta0(r, c)) + ',' +
             format_roundtrip(truth.delta1(r, c)) + ',' + format_roundtrip(truth.theta_m0(r, c)) +
             '\n';
    }
  }
  return out;
}

std::string bias_table_csv(const BiasTable& table) {
  std::string out = "n_pre,effect,mean_bias,mc_se,reps\n";
  for (const auto& cell : table.cells) {
    out += std::to_string(cell.n_pre) + ',' + cell.effect + ',' + format_sig6(cell.mean_bias) +
           ',' + format_sig6(cell.mc_se) + ',' + std::to_string(cell.reps) + '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path file_path(path);
  if (file_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file_path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
}

}  // namespace masc
