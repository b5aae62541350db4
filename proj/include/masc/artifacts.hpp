#pragma once

#include <map>
#include <string>

#include "masc/dgp.hpp"
#include "masc/estimator.hpp"
#include "masc/inference.hpp"
#include "masc/panel.hpp"
#include "masc/robustness.hpp"

namespace masc {

// Serializers for the CLI output files. Report CSVs print 6 significant
// digits; JSON and the data-exchange CSVs keep full round-trip precision.

std::string effects_csv(const EffectSeries& effects);

// effects.csv plus per-period p-value columns from placebo or resampling.
std::string effects_csv_with_pvalues(
    const EffectSeries& effects,
    const std::map<EffectKind, std::map<int, double>>& p_per_period);

std::string series_csv(const PanelDataset& dataset, const MascRun& run);

std::string weights_json(const MascRun& run);

std::string fit_json(const PanelDataset& dataset, const MascRun& run);

std::string placebo_stats_csv(const PlaceboResult& placebo, const std::string& treated);

std::string loo_summary_csv(const LooResult& loo);

std::string ground_truth_csv(const GroundTruth& truth);

std::string bias_table_csv(const BiasTable& table);

void write_file(const std::string& path, const std::string& content);

}  // namespace masc
