#include <doctest.h>

#include <cmath>

#include "masc/dgp.hpp"
#include "masc/estimator.hpp"

using namespace masc;

TEST_CASE("null model produces zero ground-truth effects") {
  DgpDesign design;
  design.mediator_effect = 0.0;
  design.rho_intercept = 0.0;
  design.rho_slope = 0.0;
  design.phi_control = 1.0;
  design.phi_treated = 1.0;
  design.seed = 3;
  auto [panel, truth] = simulate(design);
  CHECK(truth.alpha.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(truth.theta_m1.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(truth.delta0.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(truth.delta1.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("pure mediator channel: alpha = delta0 = psi, theta = 0") {
  DgpDesign design;
  design.phi_control = 1.0;
  design.phi_treated = 1.0;
  design.mediator_effect = 2.0;
  design.rho_intercept = 0.0;
  design.rho_slope = 0.0;
  design.seed = 5;
  auto [panel, truth] = simulate(design);
  for (Eigen::Index t = 0; t < truth.alpha.cols(); ++t) {
    CHECK(truth.alpha(0, t) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(truth.delta0(0, t) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(truth.theta_m1(0, t) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("ground-truth decomposition identities hold for arbitrary parameter draws") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DgpDesign design;
    design.n_treated = 2;
    design.mediator_effect = 0.9;
    design.phi_control = 0.7;
    design.phi_treated = 1.3;
    design.rho_intercept = 0.5;
    design.rho_slope = -0.4;
    design.seed = seed;
    auto [panel, truth] = simulate(design);
    for (Eigen::Index i = 0; i < truth.alpha.rows(); ++i) {
      for (Eigen::Index t = 0; t < truth.alpha.cols(); ++t) {
        CHECK(std::abs(truth.alpha(i, t) - truth.theta_m1(i, t) - truth.delta0(i, t)) <= 1e-12);
        CHECK(std::abs(truth.alpha(i, t) - truth.delta1(i, t) - truth.theta_m0(i, t)) <= 1e-12);
        const double delta_check =
            design.phi_control * (truth.m1(i, t) - truth.m0(i, t));
        CHECK(truth.delta0(i, t) == doctest::Approx(delta_check).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("treatment only alters treated units after the intervention") {
  DgpDesign null_design;
  null_design.convex_hull = false;  // keep the two designs structurally identical
  null_design.mediator_effect = 0.0;
  null_design.rho_intercept = 0.0;
  null_design.phi_treated = 1.0;
  null_design.phi_control = 1.0;
  null_design.seed = 11;
  DgpDesign shifted = null_design;
  shifted.mediator_effect = 5.0;

  auto [panel_null, truth_null] = simulate(null_design);
  auto [panel_shift, truth_shift] = simulate(shifted);

  const std::size_t t_star = panel_null.intervention_index();
  for (std::size_t u = 0; u < panel_null.n_units(); ++u) {
    const bool treated = u < panel_null.treated_units.size();
    for (std::size_t t = 0; t < panel_null.n_periods(); ++t) {
      const double mediator_gap =
          panel_shift.mediator(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) -
          panel_null.mediator(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t));
      if (treated && t >= t_star) {
        CHECK(mediator_gap == doctest::Approx(5.0).epsilon(1e-12));
      } else {
        CHECK(mediator_gap == doctest::Approx(0.0));  // observation rule: M = M(0) pre-T
      }
    }
  }
}

TEST_CASE("convex-hull mode with zero noise lets the estimator recover truth") {
  DgpDesign design;
  design.mediator_noise_sd = 0.0;
  design.outcome_noise_sd = 0.0;
  design.convex_hull = true;
  design.n_donors = 6;
  design.mediator_effect = 0.8;
  design.phi_control = 1.0;
  design.phi_treated = 1.0;
  design.rho_intercept = 1.2;
  design.seed = 13;
  auto [panel, truth] = simulate(design);

  const MascRun run = run_masc(panel, "T1", panel.donor_units, {}, monte_carlo_settings(), false);
  for (Eigen::Index t = 0; t < run.effects.total.size(); ++t) {
    CHECK(std::abs(run.effects.total(t) - truth.alpha(0, t)) <= 1e-6);
    CHECK(std::abs(run.effects.direct(t) - truth.theta_m1(0, t)) <= 1e-6);
    CHECK(std::abs(run.effects.indirect(t) - truth.delta0(0, t)) <= 1e-6);
  }
}

TEST_CASE("noise moments: mean zero within four standard errors") {
  DgpDesign design;
  design.n_shared_covariates = 0;
  design.n_outcome_covariates = 0;
  design.n_mediator_factors = 0;
  design.n_outcome_factors = 0;
  design.convex_hull = false;
  design.n_donors = 40;
  design.n_pre = 60;
  design.n_post = 20;
  design.mediator_noise_sd = 1.0;
  design.outcome_noise_sd = 1.0;
  design.mediator_effect = 0.0;

  for (const NoiseKind kind : {NoiseKind::Gaussian, NoiseKind::Uniform}) {
    design.noise = kind;
    design.seed = kind == NoiseKind::Gaussian ? 17 : 19;
    auto [panel, truth] = simulate(design);
    // With no covariates and no factors, the mediator is gamma_t + noise:
    // demeaning each period across units leaves pure noise contrasts.
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t t = 0; t < panel.n_periods(); ++t) {
      const double period_mean = panel.mediator.col(static_cast<Eigen::Index>(t)).mean();
      for (std::size_t u = 0; u < panel.n_units(); ++u) {
        sum += panel.mediator(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) -
               period_mean;
        count += 1.0;
      }
    }
    const double mean = sum / count;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(count));

    // Sample variance close to the configured scale.
    double ss = 0.0;
    for (std::size_t t = 0; t < panel.n_periods(); ++t) {
      const double period_mean = panel.mediator.col(static_cast<Eigen::Index>(t)).mean();
      for (std::size_t u = 0; u < panel.n_units(); ++u) {
        const double centered =
            panel.mediator(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(t)) -
            period_mean;
        ss += centered * centered;
      }
    }
    const double variance = ss / count;
    CHECK(variance == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("simulated panels export through the canonical CSV") {
  DgpDesign design;
  design.seed = 23;
  auto [panel, truth] = simulate(design);
  const std::string csv = serialize_panel(panel);
  std::istringstream in(csv);
  const PanelDataset reloaded = load_panel(in);
  CHECK(reloaded.n_units() == panel.n_units());
  CHECK((reloaded.outcome.array() == panel.outcome.array()).all());
  CHECK((reloaded.mediator.array() == panel.mediator.array()).all());
}

TEST_CASE("monte_carlo smoke: tiny run produces a finite, complete table") {
  DgpDesign design;
  design.n_donors = 5;
  design.n_post = 3;
  design.mediator_effect = 0.5;
  auto table = monte_carlo(design, {5, 8}, 2, 99, 1);
  CHECK(table.cells.size() == 6);  // 2 grid points x 3 effects
  for (const auto& cell : table.cells) {
    CHECK(std::isfinite(cell.mean_bias));
    CHECK(std::isfinite(cell.mc_se));
    CHECK(cell.reps == 2);
  }
  CHECK(table.find(5, "alpha") != nullptr);
  CHECK(table.find(8, "delta") != nullptr);
  CHECK(table.find(9, "alpha") == nullptr);
}

TEST_CASE("monte_carlo with zero noise has exactly zero bias at every grid point") {
  DgpDesign design;
  design.mediator_noise_sd = 0.0;
  design.outcome_noise_sd = 0.0;
  design.convex_hull = true;
  design.n_donors = 6;
  design.n_post = 3;
  design.mediator_effect = 0.8;
  design.rho_intercept = 0.4;
  auto table = monte_carlo(design, {6, 10}, 3, 7, 1);
  for (const auto& cell : table.cells) {
    CHECK(std::abs(cell.mean_bias) <= 1e-6);
  }
}

TEST_CASE("null design: mean total-effect estimate is statistically zero") {
  DgpDesign design;
  design.mediator_effect = 0.0;
  design.rho_intercept = 0.0;
  design.rho_slope = 0.0;
  design.phi_treated = design.phi_control = 1.0;
  design.n_donors = 6;
  design.n_post = 4;
  const BiasTable table = monte_carlo(design, {15}, 500, 2025, 2);
  const BiasCell* alpha = table.find(15, "alpha");
  REQUIRE(alpha != nullptr);
  CHECK(std::abs(alpha->mean_bias) <= 2.0 * alpha->mc_se);
}

TEST_CASE("constant rho: mean direct effect sits at the constant") {
  DgpDesign design;
  design.phi_treated = design.phi_control = 1.0;  // no phi contrast
  design.rho_intercept = 0.7;                     // theta = 0.7 at every post period
  design.rho_slope = 0.0;
  design.mediator_effect = 0.3;
  design.n_donors = 7;
  design.n_post = 5;
  const BiasTable table = monte_carlo(design, {25, 80}, 400, 626, 2);
  const BiasCell* theta = table.find(80, "theta");
  REQUIRE(theta != nullptr);
  // Bias here is (mean theta-hat) - 0.7; statistically indistinguishable from 0.
  CHECK(std::abs(theta->mean_bias) <= 4.0 * theta->mc_se);
}

TEST_CASE("simulate is deterministic under a fixed seed") {
  DgpDesign design;
  design.seed = 31;
  auto [panel_a, truth_a] = simulate(design);
  auto [panel_b, truth_b] = simulate(design);
  CHECK((panel_a.outcome.array() == panel_b.outcome.array()).all());
  CHECK((truth_a.alpha.array() == truth_b.alpha.array()).all());
}

TEST_CASE("bad designs are rejected") {
  DgpDesign design;
  design.n_donors = 1;
  CHECK_THROWS_AS(simulate(design), Error);
  design = {};
  design.mediator_noise_sd = -1.0;
  CHECK_THROWS_AS(simulate(design), Error);
  design = {};
  CHECK_THROWS_AS(monte_carlo(design, {10, 5}, 3, 1, 1), Error);  // non-ascending grid
  CHECK_THROWS_AS(monte_carlo(design, {10}, 1, 1, 1), Error);     // reps < 2
}
