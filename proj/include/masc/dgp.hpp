#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "masc/estimator.hpp"
#include "masc/panel.hpp"

namespace masc {

struct RawConfig;

enum class NoiseKind { Gaussian, Uniform };

// Template for drawing factor-model simulations: dimensions, effect
// coefficients, noise scales, and the convex-hull construction switch.
//
// In convex-hull mode every treated unit's covariates and factor loadings are
// an explicit random convex combination of the donors' (the first treated
// unit combines the other treated units when there are several), and the
// mediator gains one post-period-only factor on which a twin pair of donors
// loads at +/- post_spread while the treated combination stays symmetric.
// The twins give the donor pool post-period mediator variation that is
// invisible before the intervention, so weights matching the treated unit's
// post-period mediator exist alongside the pre-period matches.
struct DgpDesign {
  int n_pre = 20;
  int n_post = 10;
  int n_treated = 1;
  int n_donors = 8;

  int n_shared_covariates = 1;    // enter both mediator and outcome (Z)
  int n_outcome_covariates = 2;   // total covariates in X (>= shared)
  int n_mediator_factors = 1;
  int n_outcome_factors = 1;

  double mediator_effect = 1.0;   // treatment -> mediator shift, post periods
  double phi_control = 1.0;       // mediator -> outcome, untreated arm
  double phi_treated = 1.0;       // mediator -> outcome, treated arm
  double rho_intercept = 0.0;     // treatment -> outcome, linear in mediator:
  double rho_slope = 0.0;         //   rho(m) = rho_intercept + rho_slope * m

  double mediator_noise_sd = 0.1;
  double outcome_noise_sd = 0.1;
  NoiseKind noise = NoiseKind::Gaussian;

  bool convex_hull = true;
  double post_spread = 2.5;

  // AR(1) persistence of the factor paths (0 = i.i.d. draws). Persistent
  // factors make short pre-periods genuinely under-identify the loadings, so
  // the estimation bias decays as the window grows while the paths stay
  // stationary with unit variance.
  double factor_persistence = 0.0;

  // Scale of the unit factor loadings. Larger spreads raise the structural
  // signal relative to the transitory noise.
  double loading_scale = 1.0;

  std::uint64_t seed = 1;
};

// One realized draw of the factor model: common factor paths, covariates,
// loadings, and effect paths for every unit and period. Periods are labeled
// 1..T_max with the intervention at first_treated_period.
struct FactorModelParams {
  int n_periods = 0;
  int first_treated_period = 0;  // 1-based label of the first post period
  std::vector<std::string> treated_units;
  std::vector<std::string> donor_units;

  // Mediator side.
  Eigen::VectorXd mediator_common;            // gamma_t
  Eigen::MatrixXd mediator_covariate_coeffs;  // beta_t, periods x p
  Eigen::MatrixXd shared_covariates;          // Z_i, units x p
  Eigen::MatrixXd mediator_factors;           // periods x v (incl. post-only column in hull mode)
  Eigen::MatrixXd mediator_loadings;          // units x v
  Eigen::VectorXd mediator_treatment_effect;  // psi_t, zero before the intervention
  double mediator_noise_sd = 0.0;

  // Outcome side.
  Eigen::VectorXd outcome_common;             // zeta_t
  Eigen::MatrixXd outcome_covariate_coeffs;   // eta_t, periods x r
  Eigen::MatrixXd covariates;                 // X_i, units x r; first p columns equal Z
  Eigen::MatrixXd outcome_factors;            // lambda_t, periods x F
  Eigen::MatrixXd outcome_loadings;           // mu_i, units x F
  Eigen::VectorXd phi_control;                // phi_t(0)
  Eigen::VectorXd phi_treated;                // phi_t(1); equals phi_t(0) pre-intervention
  Eigen::VectorXd rho_intercept;              // rho_t(m) = rho_intercept_t + rho_slope_t * m
  Eigen::VectorXd rho_slope;
  double outcome_noise_sd = 0.0;

  NoiseKind noise = NoiseKind::Gaussian;
  std::uint64_t noise_seed = 0;

  std::size_t n_units() const { return treated_units.size() + donor_units.size(); }
};

// Closed-form effect truths per treated unit and post period. Noise common to
// the potential-outcome pairs cancels, so alpha = theta_m1 + delta0 =
// delta1 + theta_m0 hold exactly and delta0 = phi(0) * (M1 - M0).
struct GroundTruth {
  std::vector<std::string> treated_units;
  std::vector<int> post_periods;
  Eigen::MatrixXd m0, m1;                       // treated x post
  Eigen::MatrixXd y00, y01, y10, y11;
  Eigen::MatrixXd alpha, theta_m1, delta0, delta1, theta_m0;
};

FactorModelParams draw_params(const DgpDesign& design);

std::pair<PanelDataset, GroundTruth> simulate(const FactorModelParams& params);

inline std::pair<PanelDataset, GroundTruth> simulate(const DgpDesign& design) {
  return simulate(draw_params(design));
}

struct BiasCell {
  int n_pre = 0;
  std::string effect;
  double mean_bias = 0.0;
  double mc_se = 0.0;
  int reps = 0;
};

struct BiasTable {
  std::vector<BiasCell> cells;
  const BiasCell* find(int n_pre, const std::string& effect) const;
};

// Repeated simulate -> estimate cycles over a grid of pre-period lengths.
// Per replication the bias is the estimate minus ground truth averaged over
// post periods for the first treated unit; cells report the mean and Monte
// Carlo standard error across replications. Includes delta1 when the design
// has at least two treated units. Deterministic under the design seed.
BiasTable monte_carlo(const DgpDesign& design, const std::vector<int>& pre_period_grid, int reps,
                      std::uint64_t seed, int jobs = 0,
                      const EstimationSettings* settings = nullptr);

// Estimation defaults used by the Monte Carlo harness: default predictor
// specs, equal-pre-post V, standardization, and a zero mediator lag (the
// factor model ties the outcome at t' to the mediator at t' itself).
EstimationSettings monte_carlo_settings();

// Reads the [dgp] config section; missing keys keep the defaults above.
DgpDesign dgp_design_from(const RawConfig& raw);

}  // namespace masc
