#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "masc/config.hpp"
#include "masc/estimator.hpp"
#include "masc/panel.hpp"

namespace masc {

enum class EffectKind { Total, Direct, Indirect };

const char* effect_name(EffectKind effect);

// Root mean square prediction error over an inclusive index window.
double rmspe(const Eigen::VectorXd& actual, const Eigen::VectorXd& synthetic,
             std::size_t window_first, std::size_t window_last);

struct RatioStatistic {
  double value = 0.0;
  bool perfect_pre_fit = false;  // pre RMSPE below 1e-12; value is +infinity
};

// Post/pre RMSPE ratio, the placebo test statistic.
RatioStatistic ratio_statistic(double pre_rmspe, double post_rmspe);

struct UnitPlaceboStats {
  double pre_rmspe = 0.0;
  double post_rmspe = 0.0;
  double ratio = 0.0;
  bool perfect_pre_fit = false;
};

struct PlaceboResult {
  std::vector<int> post_periods;
  std::map<EffectKind, std::map<std::string, UnitPlaceboStats>> per_unit_stats;
  // Pre-fit-normalized |gap| per unit and post period, the per-period statistic.
  std::map<EffectKind, std::map<std::string, Eigen::VectorXd>> normalized_gaps;
  std::map<EffectKind, double> p_overall;
  std::map<EffectKind, std::map<int, double>> p_per_period;
  int denominator = 0;  // placebo units that solved (+1 under donors+1)
  std::vector<std::string> dropped_donors;
  std::vector<Warning> warnings;
};

// In-space placebo test: re-runs the requested estimation once per donor with
// that donor cast as treated and the remaining donors as its pool (the true
// treated unit never enters placebo pools). Overall p-values rank the
// post/pre RMSPE ratio; per-period p-values rank |gap|/pre_rmspe.
PlaceboResult placebo_test(const PanelDataset& dataset, const EstimationConfig& config,
                           const std::set<EffectKind>& effect_targets, int jobs = 0);

struct ResamplingResult {
  std::vector<EffectSeries> draws;          // one per iteration
  EffectSeries observed;                    // cross-treated average estimates
  std::map<EffectKind, std::map<int, double>> p_values;
  int n_iter = 0;
  std::uint64_t seed = 0;
};

// Resampling inference: removes the estimated treatment from the treated
// units (outcome by the cross-treated average total effect per period,
// mediator by the average mediator gap per period), then repeatedly draws
// pseudo-treated sets without replacement from all units and re-applies MASC.
// p-values are the share of draws at least as large in magnitude as the
// observed estimate. Bit-reproducible for a fixed seed.
ResamplingResult resampling_inference(const PanelDataset& dataset, const EstimationConfig& config,
                                      const std::vector<MascRun>& baseline, int n_iter,
                                      std::uint64_t seed, int jobs = 0);

// Effect gap series over all periods for one estimation: observed minus
// synthetic for total and direct, synthetic Y01 minus synthetic Y00 for
// indirect (pre-period gaps measure fit, post-period gaps are the effects).
Eigen::VectorXd effect_gap_series(const PanelDataset& dataset, const MascRun& run,
                                  EffectKind effect);

// Steps 1-2 of the resampling procedure: every treated unit's post-period
// outcome drops the cross-treated average total effect and its post-period
// mediator drops the cross-treated average mediator gap.
PanelDataset detreat_panel(const PanelDataset& dataset, const EstimationConfig& config,
                           const std::vector<MascRun>& baseline);

}  // namespace masc
