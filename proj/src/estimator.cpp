#include "masc/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "masc/config.hpp"
#include "masc/parallel.hpp"

namespace masc {

EstimationSettings settings_from(const EstimationConfig& config) {
  EstimationSettings settings;
  settings.v_mode = config.v_mode;
  settings.v_user = config.v_user;
  settings.standardize = config.standardize;
  settings.mediator_mode = config.mediator_mode;
  return settings;
}

namespace {

std::size_t require_unit(const PanelDataset& dataset, const std::string& unit) {
  const auto idx = dataset.unit_index(unit);
  if (!idx) throw Error(ErrorCode::UnknownUnit, unit);
  return *idx;
}

double pre_window_rmspe(const Eigen::VectorXd& actual, const Eigen::VectorXd& synthetic,
                        std::size_t n_pre) {
  double ss = 0.0;
  for (std::size_t t = 0; t < n_pre; ++t) {
    const double gap = actual(static_cast<Eigen::Index>(t)) - synthetic(static_cast<Eigen::Index>(t));
    ss += gap * gap;
  }
  return std::sqrt(ss / static_cast<double>(n_pre));
}

// For the pre-intervention problems V has no post block; equal-pre-post
// degenerates to uniform over the pre labels.
VMode effective_v_mode(VMode mode, const std::vector<PredictorLabel>& labels) {
  if (mode != VMode::EqualPrePost) return mode;
  for (const auto& label : labels) {
    if (label.post) return mode;
  }
  return VMode::Uniform;
}

VWeights make_v(const TargetSet& targets, const EstimationSettings& settings) {
  return build_v(targets.labels, effective_v_mode(settings.v_mode, targets.labels),
                 settings.v_user);
}

void check_overlap(const PanelDataset& dataset, const std::string& treated, double pre_fit_rmspe,
                   const Eigen::MatrixXd& series, std::vector<Warning>& warnings) {
  const std::size_t u = require_unit(dataset, treated);
  const std::size_t n_pre = dataset.n_pre();
  const Eigen::VectorXd pre =
      series.row(static_cast<Eigen::Index>(u)).head(static_cast<Eigen::Index>(n_pre)).transpose();
  const double mean = pre.mean();
  const double sd = n_pre > 1 ? std::sqrt((pre.array() - mean).square().sum() /
                                          static_cast<double>(n_pre - 1))
                              : 0.0;
  if (sd > 0.0 && pre_fit_rmspe > 0.2 * sd) {
    warnings.push_back({"OverlapWarning",
                        "pre-period fit RMSPE " + std::to_string(pre_fit_rmspe) +
                            " exceeds 0.2 treated pre-period standard deviations for '" + treated +
                            "'"});
  }
}

Eigen::VectorXd weighted_series(const PanelDataset& dataset, const Eigen::MatrixXd& matrix,
                                const WeightVector& weights) {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dataset.n_periods()));
  for (std::size_t d = 0; d < weights.donor_ids.size(); ++d) {
    const std::size_t u = require_unit(dataset, weights.donor_ids[d]);
    values += weights.weights(static_cast<Eigen::Index>(d)) *
              matrix.row(static_cast<Eigen::Index>(u)).transpose();
  }
  return values;
}

}  // namespace

const char* target_name(SyntheticSeries::Target target) {
  switch (target) {
    case SyntheticSeries::Target::Y00: return "y00";
    case SyntheticSeries::Target::Y01: return "y01";
    case SyntheticSeries::Target::Y10: return "y10";
    case SyntheticSeries::Target::M0: return "m0";
  }
  return "?";
}

std::vector<PredictorSpec> mediator_specs_from(const PanelDataset& dataset,
                                               const std::vector<PredictorSpec>& specs) {
  std::vector<PredictorSpec> kept;
  for (const auto& spec : specs) {
    if (spec.variable != PredictorSpec::Variable::Outcome) kept.push_back(spec);
  }
  if (!kept.empty()) return kept;
  std::vector<PredictorSpec> out;
  const std::size_t t_star = dataset.intervention_index();
  out.reserve(t_star);
  for (std::size_t p = 0; p < t_star; ++p) {
    out.push_back(PredictorSpec::mediator(dataset.periods[p], dataset.periods[p]));
  }
  return out;
}

TotalEffectEstimate estimate_total(const PanelDataset& dataset, const std::string& treated,
                                   const std::vector<std::string>& donors,
                                   const std::vector<PredictorSpec>& specs,
                                   const EstimationSettings& settings) {
  const std::vector<PredictorSpec> effective = specs.empty() ? default_specs(dataset) : specs;
  TargetSet targets = build_alpha_targets(dataset, treated, donors, effective);

  TotalEffectEstimate out;
  if (settings.standardize) {
    auto notes = standardize_targets(targets);
    out.warnings.insert(out.warnings.end(), notes.begin(), notes.end());
  }
  auto [weights, report] = solve_simplex_wls(targets, make_v(targets, settings), settings.solver);
  out.report = report;

  const std::size_t u = require_unit(dataset, treated);
  const std::size_t t_star = dataset.intervention_index();

  out.y00.target = SyntheticSeries::Target::Y00;
  out.y00.periods = dataset.periods;
  out.y00.values = weighted_series(dataset, dataset.outcome, weights);
  out.y00.pre_fit_rmspe = pre_window_rmspe(
      dataset.outcome.row(static_cast<Eigen::Index>(u)).transpose(), out.y00.values, t_star);
  out.y00.weights_by_period.emplace("all", std::move(weights));

  out.post_periods.assign(dataset.periods.begin() + static_cast<std::ptrdiff_t>(t_star),
                          dataset.periods.end());
  out.alpha.resize(static_cast<Eigen::Index>(out.post_periods.size()));
  for (std::size_t t = t_star; t < dataset.n_periods(); ++t) {
    out.alpha(static_cast<Eigen::Index>(t - t_star)) =
        dataset.outcome(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) -
        out.y00.values(static_cast<Eigen::Index>(t));
  }
  check_overlap(dataset, treated, out.y00.pre_fit_rmspe, dataset.outcome, out.warnings);
  return out;
}

DirectEffectEstimate estimate_direct(const PanelDataset& dataset, const std::string& treated,
                                     const std::vector<std::string>& donors,
                                     const std::vector<PredictorSpec>& specs,
                                     const EstimationSettings& settings) {
  const std::vector<PredictorSpec> effective = specs.empty() ? default_specs(dataset) : specs;
  const std::size_t u = require_unit(dataset, treated);
  const std::size_t t_star = dataset.intervention_index();
  const std::size_t n_post = dataset.n_post();

  DirectEffectEstimate out;
  out.post_periods.assign(dataset.periods.begin() + static_cast<std::ptrdiff_t>(t_star),
                          dataset.periods.end());
  out.theta.resize(static_cast<Eigen::Index>(n_post));

  std::vector<WeightVector> weights(n_post);
  std::vector<SolverReport> reports(n_post);
  std::vector<std::vector<Warning>> warnings(n_post);

  parallel_for(n_post, settings.jobs, [&](std::size_t i) {
    const std::size_t t = t_star + i;
    const int t_prime = dataset.periods[t];
    MediatorMode mode = settings.mediator_mode;
    if (mode.kind == MediatorMode::Kind::SingleLag) {
      mode.lag = std::min<int>(mode.lag, static_cast<int>(t - t_star));
    }
    TargetSet targets = build_theta_targets(dataset, treated, donors, effective, t_prime, mode);
    if (settings.standardize) warnings[i] = standardize_targets(targets);
    auto [w, report] = solve_simplex_wls(targets, make_v(targets, settings), settings.solver);
    weights[i] = std::move(w);
    reports[i] = report;
  });

  // Per-post-period synthetic outcome, plus averaged weights for the
  // pre-period overlap diagnostic.
  out.y01.target = SyntheticSeries::Target::Y01;
  out.y01.periods = dataset.periods;
  out.y01.values.resize(static_cast<Eigen::Index>(dataset.n_periods()));

  WeightVector averaged;
  averaged.donor_ids = weights.front().donor_ids;
  averaged.weights = Eigen::VectorXd::Zero(weights.front().weights.size());
  for (const auto& w : weights) averaged.weights += w.weights;
  averaged.weights /= static_cast<double>(n_post);

  const Eigen::VectorXd pre_series = weighted_series(dataset, dataset.outcome, averaged);
  for (std::size_t t = 0; t < t_star; ++t) {
    out.y01.values(static_cast<Eigen::Index>(t)) = pre_series(static_cast<Eigen::Index>(t));
  }
  for (std::size_t i = 0; i < n_post; ++i) {
    const std::size_t t = t_star + i;
    double synthetic = 0.0;
    for (std::size_t d = 0; d < weights[i].donor_ids.size(); ++d) {
      const std::size_t du = require_unit(dataset, weights[i].donor_ids[d]);
      synthetic += weights[i].weights(static_cast<Eigen::Index>(d)) *
                   dataset.outcome(static_cast<Eigen::Index>(du), static_cast<Eigen::Index>(t));
    }
    out.y01.values(static_cast<Eigen::Index>(t)) = synthetic;
    out.theta(static_cast<Eigen::Index>(i)) =
        dataset.outcome(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) - synthetic;
    out.reports[dataset.periods[t]] = reports[i];
    out.y01.weights_by_period.emplace(std::to_string(dataset.periods[t]), std::move(weights[i]));
  }
  out.y01.pre_fit_rmspe = pre_window_rmspe(
      dataset.outcome.row(static_cast<Eigen::Index>(u)).transpose(), out.y01.values, t_star);

  for (auto& notes : warnings) {
    out.warnings.insert(out.warnings.end(), notes.begin(), notes.end());
  }
  check_overlap(dataset, treated, out.y01.pre_fit_rmspe, dataset.outcome, out.warnings);
  return out;
}

EffectEstimate estimate_indirect(const EffectEstimate& total, const EffectEstimate& direct) {
  if (total.post_periods != direct.post_periods) {
    throw Error(ErrorCode::PeriodMisalignment,
                "total and direct effect series cover different post periods");
  }
  EffectEstimate out;
  out.post_periods = total.post_periods;
  out.values = total.values - direct.values;
  return out;
}

EffectSeries combine_effects(const std::vector<int>& post_periods, const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& theta) {
  if (alpha.size() != theta.size() ||
      alpha.size() != static_cast<Eigen::Index>(post_periods.size())) {
    throw Error(ErrorCode::PeriodMisalignment, "effect series lengths differ");
  }
  EffectSeries out;
  out.post_periods = post_periods;
  out.total = alpha;
  out.direct = theta;
  out.indirect = alpha - theta;
  return out;
}

MediatorEstimate estimate_counterfactual_mediator(const PanelDataset& dataset,
                                                  const std::string& treated,
                                                  const std::vector<std::string>& donors,
                                                  const std::vector<PredictorSpec>& specs,
                                                  const EstimationSettings& settings) {
  const std::vector<PredictorSpec> effective = mediator_specs_from(dataset, specs);
  TargetSet targets = build_mediator_targets(dataset, treated, donors, effective);

  MediatorEstimate out;
  if (settings.standardize) {
    auto notes = standardize_targets(targets);
    out.warnings.insert(out.warnings.end(), notes.begin(), notes.end());
  }
  auto [weights, report] = solve_simplex_wls(targets, make_v(targets, settings), settings.solver);
  out.report = report;

  const std::size_t u = require_unit(dataset, treated);
  out.m0.target = SyntheticSeries::Target::M0;
  out.m0.periods = dataset.periods;
  out.m0.values = weighted_series(dataset, dataset.mediator, weights);
  out.m0.pre_fit_rmspe =
      pre_window_rmspe(dataset.mediator.row(static_cast<Eigen::Index>(u)).transpose(),
                       out.m0.values, dataset.n_pre());
  out.m0.weights_by_period.emplace("all", std::move(weights));
  check_overlap(dataset, treated, out.m0.pre_fit_rmspe, dataset.mediator, out.warnings);
  return out;
}

Delta1Estimate estimate_delta1(const PanelDataset& dataset, const std::string& treated_one,
                               const std::vector<std::string>& other_treated,
                               const std::vector<std::string>& donors,
                               const std::vector<PredictorSpec>& specs,
                               const EstimationSettings& settings) {
  if (other_treated.empty()) {
    throw Error(ErrorCode::TooFewTreated,
                "estimating Y^{1,0} needs at least two treated units");
  }
  Delta1Estimate out;
  if (other_treated.size() < 5) {
    out.warnings.push_back({"SmallTreatedPool",
                            "only " + std::to_string(other_treated.size()) +
                                " other treated units; Y^{1,0} may be a poor approximation"});
  }

  const std::vector<PredictorSpec> effective = specs.empty() ? default_specs(dataset) : specs;
  TotalEffectEstimate total = estimate_total(dataset, treated_one, donors, effective, settings);
  MediatorEstimate mediator =
      estimate_counterfactual_mediator(dataset, treated_one, donors, effective, settings);
  out.warnings.insert(out.warnings.end(), total.warnings.begin(), total.warnings.end());
  out.warnings.insert(out.warnings.end(), mediator.warnings.begin(), mediator.warnings.end());

  const std::size_t u = require_unit(dataset, treated_one);
  const std::size_t t_star = dataset.intervention_index();
  const std::size_t n_post = dataset.n_post();

  out.post_periods = total.post_periods;
  out.alpha = total.alpha;
  out.delta1.resize(static_cast<Eigen::Index>(n_post));

  std::vector<WeightVector> weights(n_post);
  std::vector<SolverReport> reports(n_post);

  parallel_for(n_post, settings.jobs, [&](std::size_t i) {
    const std::size_t t = t_star + i;
    const int t_prime = dataset.periods[t];
    const double target_value = mediator.m0.values(static_cast<Eigen::Index>(t));
    TargetSet targets = build_theta_targets_with_override(dataset, treated_one, other_treated,
                                                          effective, t_prime, target_value);
    if (settings.standardize) standardize_targets(targets);
    auto [w, report] = solve_simplex_wls(targets, make_v(targets, settings), settings.solver);
    weights[i] = std::move(w);
    reports[i] = report;
  });

  out.y10.target = SyntheticSeries::Target::Y10;
  out.y10.periods = dataset.periods;
  out.y10.values.resize(static_cast<Eigen::Index>(dataset.n_periods()));

  WeightVector averaged;
  averaged.donor_ids = weights.front().donor_ids;
  averaged.weights = Eigen::VectorXd::Zero(weights.front().weights.size());
  for (const auto& w : weights) averaged.weights += w.weights;
  averaged.weights /= static_cast<double>(n_post);
  const Eigen::VectorXd pre_series = weighted_series(dataset, dataset.outcome, averaged);
  for (std::size_t t = 0; t < t_star; ++t) {
    out.y10.values(static_cast<Eigen::Index>(t)) = pre_series(static_cast<Eigen::Index>(t));
  }

  for (std::size_t i = 0; i < n_post; ++i) {
    const std::size_t t = t_star + i;
    double synthetic = 0.0;
    for (std::size_t d = 0; d < weights[i].donor_ids.size(); ++d) {
      const std::size_t du = require_unit(dataset, weights[i].donor_ids[d]);
      synthetic += weights[i].weights(static_cast<Eigen::Index>(d)) *
                   dataset.outcome(static_cast<Eigen::Index>(du), static_cast<Eigen::Index>(t));
    }
    out.y10.values(static_cast<Eigen::Index>(t)) = synthetic;
    out.delta1(static_cast<Eigen::Index>(i)) =
        dataset.outcome(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) - synthetic;
    out.reports[dataset.periods[t]] = reports[i];
    out.y10.weights_by_period.emplace(std::to_string(dataset.periods[t]), std::move(weights[i]));
  }
  out.y10.pre_fit_rmspe = pre_window_rmspe(
      dataset.outcome.row(static_cast<Eigen::Index>(u)).transpose(), out.y10.values, t_star);
  out.theta_m0 = out.alpha - out.delta1;
  return out;
}

MascRun run_masc(const PanelDataset& dataset, const std::string& treated,
                 const std::vector<std::string>& donors, const std::vector<PredictorSpec>& specs,
                 const EstimationSettings& settings, bool with_mediator) {
  MascRun run;
  run.treated = treated;

  TotalEffectEstimate total = estimate_total(dataset, treated, donors, specs, settings);
  DirectEffectEstimate direct = estimate_direct(dataset, treated, donors, specs, settings);

  run.post_periods = total.post_periods;
  run.effects = combine_effects(total.post_periods, total.alpha, direct.theta);
  run.y00 = std::move(total.y00);
  run.y01 = std::move(direct.y01);
  run.total_report = total.report;
  run.direct_reports = std::move(direct.reports);
  run.warnings = std::move(total.warnings);
  run.warnings.insert(run.warnings.end(), direct.warnings.begin(), direct.warnings.end());

  run.all_converged = run.total_report.converged;
  for (const auto& [period, report] : run.direct_reports) {
    run.all_converged = run.all_converged && report.converged;
  }

  if (with_mediator) {
    MediatorEstimate mediator =
        estimate_counterfactual_mediator(dataset, treated, donors, specs, settings);
    run.m0 = std::move(mediator.m0);
    run.mediator_report = mediator.report;
    run.all_converged = run.all_converged && mediator.report.converged;
    run.warnings.insert(run.warnings.end(), mediator.warnings.begin(), mediator.warnings.end());
  }
  return run;
}

}  // namespace masc
