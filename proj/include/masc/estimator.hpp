#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "masc/errors.hpp"
#include "masc/panel.hpp"
#include "masc/predictor.hpp"
#include "masc/solver.hpp"

namespace masc {

struct EstimationConfig;

// One synthetic counterpart series over the full period range. Y00 and M0 use
// a single weight vector (stored under "all"); Y01 and Y10 re-solve per post
// period and store one weight vector per post-period label. For per-period
// targets the pre-period values are computed with the average of the
// post-period weight vectors, which also defines pre_fit_rmspe.
struct SyntheticSeries {
  enum class Target { Y00, Y01, Y10, M0 };

  Target target = Target::Y00;
  std::vector<int> periods;
  Eigen::VectorXd values;
  std::map<std::string, WeightVector> weights_by_period;
  double pre_fit_rmspe = 0.0;
};

const char* target_name(SyntheticSeries::Target target);

// Post-period effect estimates; indirect is defined as total - direct, so the
// decomposition identity holds to machine precision.
struct EffectSeries {
  std::vector<int> post_periods;
  Eigen::VectorXd total;
  Eigen::VectorXd direct;
  Eigen::VectorXd indirect;
};

struct EffectEstimate {
  std::vector<int> post_periods;
  Eigen::VectorXd values;
};

struct EstimationSettings {
  VMode v_mode = VMode::EqualPrePost;
  std::map<std::string, double> v_user;
  bool standardize = true;
  MediatorMode mediator_mode = MediatorMode::single_lag(1);
  SolverOptions solver;
  int jobs = 1;  // worker cap for per-post-period solves
};

EstimationSettings settings_from(const EstimationConfig& config);

struct TotalEffectEstimate {
  SyntheticSeries y00;
  std::vector<int> post_periods;
  Eigen::VectorXd alpha;
  SolverReport report;
  std::vector<Warning> warnings;
};

struct DirectEffectEstimate {
  SyntheticSeries y01;
  std::vector<int> post_periods;
  Eigen::VectorXd theta;
  std::map<int, SolverReport> reports;
  std::vector<Warning> warnings;
};

struct MediatorEstimate {
  SyntheticSeries m0;
  SolverReport report;
  std::vector<Warning> warnings;
};

struct Delta1Estimate {
  SyntheticSeries y10;
  std::vector<int> post_periods;
  Eigen::VectorXd alpha;
  Eigen::VectorXd delta1;
  Eigen::VectorXd theta_m0;  // alpha - delta1, exact
  std::map<int, SolverReport> reports;
  std::vector<Warning> warnings;
};

// Standard SCM: weights L* solve the pre-period matching problem once;
// alpha_t = Y_treated,t - sum_i l*_i Y_it for post t.
TotalEffectEstimate estimate_total(const PanelDataset& dataset, const std::string& treated,
                                   const std::vector<std::string>& donors,
                                   const std::vector<PredictorSpec>& specs,
                                   const EstimationSettings& settings);

// MASC direct effect: a fresh W*_t' per post period solves the theta-targets
// problem (post-period mediator appended); theta_t' = Y_t' - sum w*_it' Y_it'.
// In single-lag mode the lag is clamped so the matched mediator never falls
// before the intervention (lag_eff = min(lag, t' - T)).
DirectEffectEstimate estimate_direct(const PanelDataset& dataset, const std::string& treated,
                                     const std::vector<std::string>& donors,
                                     const std::vector<PredictorSpec>& specs,
                                     const EstimationSettings& settings);

// delta_t = alpha_t - theta_t, elementwise over aligned post periods.
EffectEstimate estimate_indirect(const EffectEstimate& total, const EffectEstimate& direct);

EffectSeries combine_effects(const std::vector<int>& post_periods, const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& theta);

// Standard SCM on the mediator as outcome (pre-period mediator targets plus
// any covariate specs); one weight vector K* for all periods.
MediatorEstimate estimate_counterfactual_mediator(const PanelDataset& dataset,
                                                  const std::string& treated,
                                                  const std::vector<std::string>& donors,
                                                  const std::vector<PredictorSpec>& specs,
                                                  const EstimationSettings& settings);

// Two-step estimator of Y^{1,0}: step 1 estimates the counterfactual mediator
// from the donor pool; step 2 solves, over the other treated units as the
// donor set, theta-style problems whose post-period target is that estimate.
// Assumes rho(.) linear; needs at least one other treated unit.
Delta1Estimate estimate_delta1(const PanelDataset& dataset, const std::string& treated_one,
                               const std::vector<std::string>& other_treated,
                               const std::vector<std::string>& donors,
                               const std::vector<PredictorSpec>& specs,
                               const EstimationSettings& settings);

// Full MASC run for one treated unit: total + direct + indirect effects and
// the synthetic series behind them.
struct MascRun {
  std::string treated;
  std::vector<int> post_periods;
  EffectSeries effects;
  SyntheticSeries y00;
  SyntheticSeries y01;
  SyntheticSeries m0;
  std::map<int, SolverReport> direct_reports;
  SolverReport total_report;
  SolverReport mediator_report;
  std::vector<Warning> warnings;
  bool all_converged = true;
};

MascRun run_masc(const PanelDataset& dataset, const std::string& treated,
                 const std::vector<std::string>& donors, const std::vector<PredictorSpec>& specs,
                 const EstimationSettings& settings, bool with_mediator = true);

// Mediator-focused specs for the counterfactual-mediator problem: the
// mediator and covariate entries of the user's specs, or every pre-period
// mediator value when none remain.
std::vector<PredictorSpec> mediator_specs_from(const PanelDataset& dataset,
                                               const std::vector<PredictorSpec>& specs);

}  // namespace masc
