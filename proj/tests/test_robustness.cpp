#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "masc/random.hpp"
#include "masc/robustness.hpp"

using namespace masc;
using masc::testing::config_for;
using masc::testing::make_panel;

namespace {

// Treated = 0.45 A + 0.55 B in every period (plus a post shift); C is far
// from the hull and earns no weight.
PanelDataset ab_plus_noise_panel(std::uint64_t seed, double effect) {
  Rng rng(seed);
  const std::size_t n_pre = 10, n_post = 5, n_periods = n_pre + n_post;
  Eigen::MatrixXd outcome(4, n_periods), mediator(4, n_periods);
  for (std::size_t t = 0; t < n_periods; ++t) {
    outcome(1, static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
    outcome(2, static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
    outcome(3, static_cast<Eigen::Index>(t)) = rng.normal(40, 1);  // far-off donor
    mediator(1, static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
    mediator(2, static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
    mediator(3, static_cast<Eigen::Index>(t)) = rng.normal(40, 1);
    const double shift = t >= n_pre ? effect : 0.0;
    outcome(0, static_cast<Eigen::Index>(t)) =
        0.45 * outcome(1, static_cast<Eigen::Index>(t)) +
        0.55 * outcome(2, static_cast<Eigen::Index>(t)) + shift;
    mediator(0, static_cast<Eigen::Index>(t)) =
        0.45 * mediator(1, static_cast<Eigen::Index>(t)) +
        0.55 * mediator(2, static_cast<Eigen::Index>(t));
  }
  std::vector<int> periods(n_periods);
  for (std::size_t t = 0; t < n_periods; ++t) periods[t] = static_cast<int>(t + 1);
  return make_panel({"treated", "A", "B", "C"}, periods, outcome, mediator, {"treated"},
                    {"A", "B", "C"}, static_cast<int>(n_pre + 1));
}

}  // namespace

TEST_CASE("excluding a zero-weight donor reproduces the baseline") {
  const PanelDataset panel = ab_plus_noise_panel(11, 2.0);
  EstimationConfig config = config_for(panel);
  config.mediator_mode = MediatorMode::single_lag(0);

  const std::set<EffectKind> targets = {EffectKind::Total, EffectKind::Direct,
                                        EffectKind::Indirect};
  const LooResult result = leave_one_out(panel, config, targets, 2);
  CHECK(result.variants.size() == 3);

  const LooVariant& without_c = result.variants.at("C");
  REQUIRE_FALSE(without_c.failed);
  CHECK((without_c.effects.total - result.baseline.total).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((without_c.effects.direct - result.baseline.direct).cwiseAbs().maxCoeff() <= 1e-8);

  // Excluding a load-bearing donor moves the estimates materially.
  const LooVariant& without_a = result.variants.at("A");
  REQUIRE_FALSE(without_a.failed);
  const double c_deviation =
      (without_c.effects.total - result.baseline.total).cwiseAbs().maxCoeff();
  const double a_deviation =
      (without_a.effects.total - result.baseline.total).cwiseAbs().maxCoeff();
  CHECK(a_deviation > 10.0 * std::max(c_deviation, 1e-12));
}

TEST_CASE("max deviation summarises across variants and periods") {
  const PanelDataset panel = ab_plus_noise_panel(13, 1.0);
  EstimationConfig config = config_for(panel);
  config.mediator_mode = MediatorMode::single_lag(0);
  const LooResult result = leave_one_out(panel, config, {EffectKind::Total}, 1);
  REQUIRE(result.max_abs_deviation.count(EffectKind::Total) == 1);
  double expected = 0.0;
  for (const auto& [donor, variant] : result.variants) {
    if (variant.failed) continue;
    expected = std::max(expected,
                        (variant.effects.total - result.baseline.total).cwiseAbs().maxCoeff());
  }
  CHECK(result.max_abs_deviation.at(EffectKind::Total) == doctest::Approx(expected));
}

TEST_CASE("leave-one-out needs at least three donors") {
  const PanelDataset panel = masc::testing::hull_panel(2, 8, 4, 1.0, 0.0, 17);
  EstimationConfig config = config_for(panel);
  CHECK_THROWS_AS(leave_one_out(panel, config, {EffectKind::Total}, 1), Error);
}
