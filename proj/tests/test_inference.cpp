#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "masc/dgp.hpp"
#include "masc/inference.hpp"
#include "masc/random.hpp"

using namespace masc;
using masc::testing::config_for;
using masc::testing::hull_panel;

namespace {

EstimationConfig dgp_config(const PanelDataset& panel) {
  EstimationConfig config = config_for(panel);
  config.mediator_mode = MediatorMode::single_lag(0);
  return config;
}

}  // namespace

TEST_CASE("rmspe arithmetic") {
  Eigen::VectorXd actual(4), synthetic(4);
  actual << 1.0, 2.0, 3.0, 4.0;
  synthetic = actual;
  CHECK(rmspe(actual, synthetic, 0, 3) == doctest::Approx(0.0));

  synthetic.array() -= 2.0;
  CHECK(rmspe(actual, synthetic, 0, 3) == doctest::Approx(2.0));

  synthetic = actual;
  synthetic(2) -= 3.0;
  synthetic(3) -= 4.0;
  CHECK(rmspe(actual, synthetic, 2, 3) == doctest::Approx(std::sqrt(25.0 / 2.0)));

  CHECK_THROWS_AS(rmspe(actual, synthetic, 3, 2), Error);
  CHECK_THROWS_AS(rmspe(actual, synthetic, 0, 4), Error);
}

TEST_CASE("rmspe is invariant to permuting periods inside the window") {
  Rng rng(3);
  Eigen::VectorXd actual(8), synthetic(8);
  for (Eigen::Index t = 0; t < 8; ++t) {
    actual(t) = rng.normal();
    synthetic(t) = rng.normal();
  }
  const double base = rmspe(actual, synthetic, 0, 7);
  std::vector<Eigen::Index> order = {5, 2, 7, 0, 3, 6, 1, 4};
  Eigen::VectorXd actual_p(8), synthetic_p(8);
  for (Eigen::Index t = 0; t < 8; ++t) {
    actual_p(t) = actual(order[static_cast<std::size_t>(t)]);
    synthetic_p(t) = synthetic(order[static_cast<std::size_t>(t)]);
  }
  CHECK(rmspe(actual_p, synthetic_p, 0, 7) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ratio statistic") {
  CHECK(ratio_statistic(1.0, 3.0).value == doctest::Approx(3.0));
  CHECK_FALSE(ratio_statistic(1.0, 3.0).perfect_pre_fit);
  CHECK(ratio_statistic(2.0, 2.0).value == doctest::Approx(1.0));

  const RatioStatistic guarded = ratio_statistic(0.0, 2.0);
  CHECK(std::isinf(guarded.value));
  CHECK(guarded.perfect_pre_fit);
}

TEST_CASE("ratio statistic is invariant to a common positive gap scale") {
  Rng rng(9);
  Eigen::VectorXd gaps(12);
  for (Eigen::Index t = 0; t < 12; ++t) gaps(t) = rng.normal();
  auto window_rmspe = [&](const Eigen::VectorXd& g, std::size_t first, std::size_t last) {
    double ss = 0.0;
    for (std::size_t t = first; t <= last; ++t) ss += g(static_cast<Eigen::Index>(t)) * g(static_cast<Eigen::Index>(t));
    return std::sqrt(ss / static_cast<double>(last - first + 1));
  };
  const double base =
      ratio_statistic(window_rmspe(gaps, 0, 7), window_rmspe(gaps, 8, 11)).value;
  const Eigen::VectorXd scaled = 37.5 * gaps;
  const double scaled_ratio =
      ratio_statistic(window_rmspe(scaled, 0, 7), window_rmspe(scaled, 8, 11)).value;
  CHECK(scaled_ratio == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("placebo test ranks the treated unit against in-space placebos") {
  // Strong injected effect on the treated unit; donors carry no effect.
  const PanelDataset panel = hull_panel(9, 14, 6, 25.0, 0.0, 101);
  EstimationConfig config = dgp_config(panel);
  const PlaceboResult result =
      placebo_test(panel, config, {EffectKind::Total, EffectKind::Direct, EffectKind::Indirect}, 2);

  CHECK(result.denominator == 9);
  // The treated effect dwarfs every placebo: zero exceedances.
  CHECK(result.p_overall.at(EffectKind::Total) == doctest::Approx(0.0));
  CHECK(result.per_unit_stats.at(EffectKind::Total).count("treated") == 1);
  CHECK(result.per_unit_stats.at(EffectKind::Total).size() == 10);

  // p-values live on the grid {k/J}.
  for (const auto& [effect, p] : result.p_overall) {
    const double scaled = p * result.denominator;
    CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
  }
  for (const auto& [effect, by_period] : result.p_per_period) {
    for (const auto& [period, p] : by_period) {
      const double scaled = p * result.denominator;
      CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("placebo denominator honors the donors+1 convention") {
  const PanelDataset panel = hull_panel(6, 10, 5, 4.0, 0.0, 103);
  EstimationConfig config = dgp_config(panel);
  config.inference.pvalue_denominator = PValueDenominator::DonorsPlusOne;
  const PlaceboResult result = placebo_test(panel, config, {EffectKind::Total}, 2);
  CHECK(result.denominator == 7);
}

TEST_CASE("placebo p-value is near one half for a median treated unit") {
  // Exchangeable null panel: every unit is i.i.d.; the treated unit's rank is
  // uniform, so across seeds the p-value concentrates around 1/2.
  double total_p = 0.0;
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DgpDesign design;
    design.convex_hull = false;
    design.n_donors = 7;
    design.n_pre = 12;
    design.n_post = 6;
    design.mediator_effect = 0.0;
    design.phi_treated = design.phi_control;
    design.seed = seed;
    auto [panel, truth] = simulate(design);
    EstimationConfig config = config_for(panel);
    config.mediator_mode = MediatorMode::single_lag(0);
    const PlaceboResult result = placebo_test(panel, config, {EffectKind::Total}, 2);
    total_p += result.p_overall.at(EffectKind::Total);
    ++runs;
  }
  const double mean_p = total_p / runs;
  CHECK(mean_p > 0.30);
  CHECK(mean_p < 0.72);
}

TEST_CASE("resampling is bit-reproducible under a fixed seed") {
  const PanelDataset panel = hull_panel(5, 10, 4, 2.0, 0.5, 107);
  EstimationConfig config = dgp_config(panel);
  const EstimationSettings settings = settings_from(config);
  std::vector<MascRun> baseline = {
      run_masc(panel, "treated", panel.donor_units, {}, settings, true)};

  const ResamplingResult a = resampling_inference(panel, config, baseline, 10, 77, 2);
  const ResamplingResult b = resampling_inference(panel, config, baseline, 10, 77, 1);
  REQUIRE(a.draws.size() == 10);
  REQUIRE(b.draws.size() == 10);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    CHECK((a.draws[i].total.array() == b.draws[i].total.array()).all());
    CHECK((a.draws[i].direct.array() == b.draws[i].direct.array()).all());
    CHECK((a.draws[i].indirect.array() == b.draws[i].indirect.array()).all());
  }
  CHECK(a.p_values == b.p_values);

  const ResamplingResult c = resampling_inference(panel, config, baseline, 10, 78, 2);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    any_difference = any_difference || (a.draws[i].total - c.draws[i].total).cwiseAbs().maxCoeff() > 0;
  }
  CHECK(any_difference);
}

TEST_CASE("de-treated panel carries no remaining estimated effect") {
  const PanelDataset panel = hull_panel(5, 12, 5, 3.0, 0.0, 109);
  EstimationConfig config = dgp_config(panel);
  const EstimationSettings settings = settings_from(config);
  std::vector<MascRun> baseline = {
      run_masc(panel, "treated", panel.donor_units, {}, settings, true)};

  const PanelDataset detreated = detreat_panel(panel, config, baseline);
  // Pre-period data are untouched, so the weights re-solve identically and
  // the de-treated total effect is exactly zero for a single treated unit.
  const TotalEffectEstimate after =
      estimate_total(detreated, "treated", panel.donor_units, {}, settings);
  CHECK(after.alpha.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("resampling p-values are extreme for a huge injected effect") {
  const PanelDataset panel = hull_panel(6, 12, 4, 40.0, 0.0, 113);
  EstimationConfig config = dgp_config(panel);
  const EstimationSettings settings = settings_from(config);
  std::vector<MascRun> baseline = {
      run_masc(panel, "treated", panel.donor_units, {}, settings, true)};
  const ResamplingResult result = resampling_inference(panel, config, baseline, 50, 5, 2);
  // No pseudo-treated draw on the de-treated panel reaches |40|.
  for (const auto& [period, p] : result.p_values.at(EffectKind::Total)) {
    CHECK(p <= 0.1);
  }
}

TEST_CASE("resampling rejects missing baselines and tiny pools") {
  const PanelDataset panel = hull_panel(5, 8, 4, 1.0, 0.0, 127);
  EstimationConfig config = dgp_config(panel);
  CHECK_THROWS_AS(resampling_inference(panel, config, {}, 10, 1, 1), Error);

  const EstimationSettings settings = settings_from(config);
  std::vector<MascRun> baseline = {
      run_masc(panel, "treated", panel.donor_units, {}, settings, false)};
  // Baseline without the counterfactual mediator is refused.
  CHECK_THROWS_AS(resampling_inference(panel, config, baseline, 10, 1, 1), Error);

  baseline = {run_masc(panel, "treated", panel.donor_units, {}, settings, true)};
  EstimationConfig tiny = config;
  tiny.donors = {"donor1"};
  CHECK_THROWS_AS(resampling_inference(panel, tiny, baseline, 10, 1, 1), Error);
}

TEST_CASE("effect gap series match the estimated effects at post periods") {
  const PanelDataset panel = hull_panel(5, 9, 4, 2.0, 0.3, 131);
  const EstimationSettings settings{VMode::EqualPrePost, {}, true, MediatorMode::single_lag(0), {}, 1};
  const MascRun run = run_masc(panel, "treated", panel.donor_units, {}, settings, false);
  const Eigen::VectorXd total_gaps = effect_gap_series(panel, run, EffectKind::Total);
  const Eigen::VectorXd direct_gaps = effect_gap_series(panel, run, EffectKind::Direct);
  const Eigen::VectorXd indirect_gaps = effect_gap_series(panel, run, EffectKind::Indirect);
  const std::size_t t_star = panel.intervention_index();
  for (std::size_t i = 0; i < run.post_periods.size(); ++i) {
    const Eigen::Index t = static_cast<Eigen::Index>(t_star + i);
    CHECK(total_gaps(t) == doctest::Approx(run.effects.total(static_cast<Eigen::Index>(i))));
    CHECK(direct_gaps(t) == doctest::Approx(run.effects.direct(static_cast<Eigen::Index>(i))));
    CHECK(indirect_gaps(t) == doctest::Approx(run.effects.indirect(static_cast<Eigen::Index>(i))));
  }
}
