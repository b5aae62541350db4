#pragma once

#include <map>
#include <set>
#include <string>

#include "masc/config.hpp"
#include "masc/estimator.hpp"
#include "masc/inference.hpp"

namespace masc {

struct LooVariant {
  EffectSeries effects;
  bool failed = false;
  std::string error;
};

struct LooResult {
  EffectSeries baseline;
  std::map<std::string, LooVariant> variants;        // excluded donor -> effects
  std::map<EffectKind, double> max_abs_deviation;    // over variants and post periods
  std::vector<Warning> warnings;
};

// Donor-pool sensitivity: one full re-estimation per excluded donor. Needs a
// pool of at least 3 so every variant keeps 2 donors; failed variants are
// recorded and skipped in the deviation summary.
LooResult leave_one_out(const PanelDataset& dataset, const EstimationConfig& config,
                        const std::set<EffectKind>& effect_targets, int jobs = 0);

}  // namespace masc
