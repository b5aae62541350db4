#include "masc/dgp.hpp"

#include <cmath>

#include "masc/config.hpp"
#include "masc/parallel.hpp"
#include "masc/random.hpp"
#include "masc/text.hpp"

namespace masc {

namespace {

double draw_noise(Rng& rng, NoiseKind kind, double sd) {
  if (sd <= 0.0) return 0.0;
  if (kind == NoiseKind::Gaussian) return rng.normal(0.0, sd);
  // Uniform with matched standard deviation.
  const double half_width = sd * std::sqrt(3.0);
  return rng.uniform(-half_width, half_width);
}

Eigen::MatrixXd standard_normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  }
  return out;
}

}  // namespace

FactorModelParams draw_params(const DgpDesign& design) {
  if (design.n_pre < 1 || design.n_post < 1 || design.n_treated < 1 || design.n_donors < 2 ||
      design.n_shared_covariates < 0 ||
      design.n_outcome_covariates < design.n_shared_covariates ||
      design.n_mediator_factors < 0 || design.n_outcome_factors < 0 ||
      design.mediator_noise_sd < 0.0 || design.outcome_noise_sd < 0.0) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent DGP design");
  }
  Rng rng(design.seed);

  const int n_periods = design.n_pre + design.n_post;
  const int t_star = design.n_pre;  // 0-based index of the first post period
  const std::size_t n_treated = static_cast<std::size_t>(design.n_treated);
  const std::size_t n_donors = static_cast<std::size_t>(design.n_donors);
  const std::size_t n_units = n_treated + n_donors;
  const Eigen::Index p = design.n_shared_covariates;
  const Eigen::Index r = design.n_outcome_covariates;
  const bool twins = design.convex_hull && design.n_donors >= 3;
  const Eigen::Index v = design.n_mediator_factors + (twins ? 1 : 0);
  const Eigen::Index f = design.n_outcome_factors;

  FactorModelParams params;
  params.n_periods = n_periods;
  params.first_treated_period = t_star + 1;
  for (std::size_t i = 0; i < n_treated; ++i) params.treated_units.push_back("T" + std::to_string(i + 1));
  for (std::size_t i = 0; i < n_donors; ++i) params.donor_units.push_back("C" + std::to_string(i + 1));

  const double ar = design.factor_persistence;
  if (ar < 0.0 || ar >= 1.0) {
    throw Error(ErrorCode::DimensionMismatch, "factor_persistence must lie in [0, 1)");
  }
  auto maybe_walk = [&](Eigen::MatrixXd paths) {
    if (ar > 0.0) {
      // Stationary AR(1) with unit marginal variance.
      const double innovation = std::sqrt(1.0 - ar * ar);
      for (Eigen::Index col = 0; col < paths.cols(); ++col) {
        for (Eigen::Index t = 1; t < paths.rows(); ++t) {
          paths(t, col) = ar * paths(t - 1, col) + innovation * paths(t, col);
        }
      }
    }
    return paths;
  };
  params.mediator_common = standard_normal_matrix(rng, n_periods, 1);
  params.mediator_covariate_coeffs = standard_normal_matrix(rng, n_periods, p);
  params.mediator_factors = maybe_walk(standard_normal_matrix(rng, n_periods, v));
  if (twins) {
    // Post-period-only factor: silent before the intervention.
    for (int t = 0; t < n_periods; ++t) {
      params.mediator_factors(t, v - 1) = t < t_star ? 0.0 : 1.0;
    }
  }
  params.outcome_common = standard_normal_matrix(rng, n_periods, 1);
  params.outcome_covariate_coeffs = standard_normal_matrix(rng, n_periods, r);
  params.outcome_factors = maybe_walk(standard_normal_matrix(rng, n_periods, f));

  params.mediator_treatment_effect = Eigen::VectorXd::Zero(n_periods);
  params.phi_control = Eigen::VectorXd::Constant(n_periods, design.phi_control);
  params.phi_treated = Eigen::VectorXd::Constant(n_periods, design.phi_control);
  params.rho_intercept = Eigen::VectorXd::Zero(n_periods);
  params.rho_slope = Eigen::VectorXd::Zero(n_periods);
  for (int t = t_star; t < n_periods; ++t) {
    params.mediator_treatment_effect(t) = design.mediator_effect;
    params.phi_treated(t) = design.phi_treated;
    params.rho_intercept(t) = design.rho_intercept;
    params.rho_slope(t) = design.rho_slope;
  }

  // Donor covariates and loadings.
  Eigen::MatrixXd donor_x = standard_normal_matrix(rng, static_cast<Eigen::Index>(n_donors), r);
  Eigen::MatrixXd donor_mu =
      design.loading_scale * standard_normal_matrix(rng, static_cast<Eigen::Index>(n_donors), f);
  Eigen::MatrixXd donor_rho =
      design.loading_scale * standard_normal_matrix(rng, static_cast<Eigen::Index>(n_donors), v);
  if (twins) {
    // The twin spread must dominate the mediator shift so that re-weighting
    // mass between the twins can reach the treated unit's shifted mediator
    // without leaving the simplex (the treated combination puts ~0.225+ on
    // each twin; the required shift is mediator_effect / (2 * spread)).
    const double spread =
        std::max(design.post_spread, 2.5 * std::abs(design.mediator_effect));
    const Eigen::Index c = static_cast<Eigen::Index>(n_donors) - 2;
    const Eigen::Index d = static_cast<Eigen::Index>(n_donors) - 1;
    donor_x.row(d) = donor_x.row(c);
    donor_mu.row(d) = donor_mu.row(c);
    donor_rho.row(d) = donor_rho.row(c);
    donor_rho.col(v - 1).setZero();
    donor_rho(c, v - 1) = -spread;
    donor_rho(d, v - 1) = spread;
  }

  params.covariates.resize(static_cast<Eigen::Index>(n_units), r);
  params.outcome_loadings.resize(static_cast<Eigen::Index>(n_units), f);
  params.mediator_loadings.resize(static_cast<Eigen::Index>(n_units), v);

  auto donor_row = [&](std::size_t j) { return static_cast<Eigen::Index>(n_treated + j); };
  for (std::size_t j = 0; j < n_donors; ++j) {
    params.covariates.row(donor_row(j)) = donor_x.row(static_cast<Eigen::Index>(j));
    params.outcome_loadings.row(donor_row(j)) = donor_mu.row(static_cast<Eigen::Index>(j));
    params.mediator_loadings.row(donor_row(j)) = donor_rho.row(static_cast<Eigen::Index>(j));
  }

  auto donor_combination = [&](Rng& r_local) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_donors));
    if (twins) {
      // The twin pair keeps a guaranteed symmetric share so post-period
      // re-weighting between the twins stays feasible.
      const double twin_mass = r_local.uniform(0.45, 0.55);
      const std::vector<double> rest = r_local.simplex_point(n_donors - 2);
      for (std::size_t s = 0; s < n_donors - 2; ++s) {
        a(static_cast<Eigen::Index>(s)) = (1.0 - twin_mass) * rest[s];
      }
      a(static_cast<Eigen::Index>(n_donors) - 2) = twin_mass / 2.0;
      a(static_cast<Eigen::Index>(n_donors) - 1) = twin_mass / 2.0;
    } else {
      const std::vector<double> mass = r_local.simplex_point(n_donors);
      for (std::size_t s = 0; s < n_donors; ++s) a(static_cast<Eigen::Index>(s)) = mass[s];
    }
    return a;
  };

  if (design.convex_hull) {
    const double spread = std::max(design.post_spread, 2.5 * std::abs(design.mediator_effect));
    // With four or more treated units the last two form a treated twin pair
    // (identical structure, opposite post-only mediator loadings), so the
    // two-step problem over the other treated units can match the first
    // unit's counterfactual mediator exactly despite the common shift.
    const bool treated_twins = twins && n_treated >= 4;
    for (std::size_t i = 0; i < n_treated; ++i) {
      if (i == 0 && n_treated >= 2) continue;
      if (treated_twins && i == n_treated - 1) continue;
      const Eigen::VectorXd a = donor_combination(rng);
      params.covariates.row(static_cast<Eigen::Index>(i)) = a.transpose() * donor_x;
      params.outcome_loadings.row(static_cast<Eigen::Index>(i)) = a.transpose() * donor_mu;
      params.mediator_loadings.row(static_cast<Eigen::Index>(i)) = a.transpose() * donor_rho;
    }
    if (treated_twins) {
      const Eigen::Index c = static_cast<Eigen::Index>(n_treated) - 2;
      const Eigen::Index d = static_cast<Eigen::Index>(n_treated) - 1;
      params.covariates.row(d) = params.covariates.row(c);
      params.outcome_loadings.row(d) = params.outcome_loadings.row(c);
      params.mediator_loadings.row(d) = params.mediator_loadings.row(c);
      params.mediator_loadings(c, v - 1) -= spread;
      params.mediator_loadings(d, v - 1) += spread;
    }
    if (n_treated >= 2) {
      // The first treated unit combines the other treated units, which keeps
      // it inside both their hull and the donors' hull. The treated twin
      // pair keeps a guaranteed symmetric share of the mass.
      std::vector<double> mass;
      if (treated_twins) {
        const double twin_mass = rng.uniform(0.45, 0.55);
        const std::vector<double> rest = rng.simplex_point(n_treated - 3);
        for (const double m_rest : rest) mass.push_back((1.0 - twin_mass) * m_rest);
        mass.push_back(twin_mass / 2.0);
        mass.push_back(twin_mass / 2.0);
      } else {
        mass = rng.simplex_point(n_treated - 1);
      }
      Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(r);
      Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(f);
      Eigen::RowVectorXd rho = Eigen::RowVectorXd::Zero(v);
      for (std::size_t i = 1; i < n_treated; ++i) {
        x += mass[i - 1] * params.covariates.row(static_cast<Eigen::Index>(i));
        mu += mass[i - 1] * params.outcome_loadings.row(static_cast<Eigen::Index>(i));
        rho += mass[i - 1] * params.mediator_loadings.row(static_cast<Eigen::Index>(i));
      }
      params.covariates.row(0) = x;
      params.outcome_loadings.row(0) = mu;
      params.mediator_loadings.row(0) = rho;
    }
  } else {
    for (std::size_t i = 0; i < n_treated; ++i) {
      params.covariates.row(static_cast<Eigen::Index>(i)) =
          standard_normal_matrix(rng, 1, r);
      params.outcome_loadings.row(static_cast<Eigen::Index>(i)) =
          design.loading_scale * standard_normal_matrix(rng, 1, f);
      params.mediator_loadings.row(static_cast<Eigen::Index>(i)) =
          design.loading_scale * standard_normal_matrix(rng, 1, v);
    }
  }

  params.shared_covariates = params.covariates.leftCols(p);
  params.mediator_noise_sd = design.mediator_noise_sd;
  params.outcome_noise_sd = design.outcome_noise_sd;
  params.noise = design.noise;
  params.noise_seed = derive_seed(design.seed, 0x6e6f6973ull);
  return params;
}

std::pair<PanelDataset, GroundTruth> simulate(const FactorModelParams& params) {
  const std::size_t n_units = params.n_units();
  const std::size_t n_treated = params.treated_units.size();
  const int n_periods = params.n_periods;
  const int t_star = params.first_treated_period - 1;
  if (params.covariates.rows() != static_cast<Eigen::Index>(n_units) ||
      params.mediator_loadings.rows() != static_cast<Eigen::Index>(n_units) ||
      params.outcome_loadings.rows() != static_cast<Eigen::Index>(n_units) ||
      params.mediator_factors.rows() != n_periods ||
      params.outcome_factors.rows() != n_periods || t_star < 1 || t_star >= n_periods) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent factor model parameters");
  }

  Rng rng(params.noise_seed);
  Eigen::MatrixXd nu(n_units, n_periods);
  Eigen::MatrixXd eps(n_units, n_periods);
  for (std::size_t i = 0; i < n_units; ++i) {
    for (int t = 0; t < n_periods; ++t) {
      nu(static_cast<Eigen::Index>(i), t) = draw_noise(rng, params.noise, params.mediator_noise_sd);
      eps(static_cast<Eigen::Index>(i), t) = draw_noise(rng, params.noise, params.outcome_noise_sd);
    }
  }

  // Potential mediators and the shared structural part of the outcomes.
  Eigen::MatrixXd m0(n_units, n_periods);
  Eigen::MatrixXd base(n_units, n_periods);
  for (std::size_t i = 0; i < n_units; ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    for (int t = 0; t < n_periods; ++t) {
      m0(row, t) = params.mediator_common(t) +
                   params.mediator_covariate_coeffs.row(t).dot(params.shared_covariates.row(row)) +
                   params.mediator_factors.row(t).dot(params.mediator_loadings.row(row)) +
                   nu(row, t);
      base(row, t) = params.outcome_common(t) +
                     params.outcome_covariate_coeffs.row(t).dot(params.covariates.row(row)) +
                     params.outcome_factors.row(t).dot(params.outcome_loadings.row(row)) +
                     eps(row, t);
    }
  }
  Eigen::MatrixXd m1 = m0;
  for (int t = 0; t < n_periods; ++t) m1.col(t).array() += params.mediator_treatment_effect(t);

  auto y00_at = [&](Eigen::Index i, int t) { return base(i, t) + params.phi_control(t) * m0(i, t); };
  auto y01_at = [&](Eigen::Index i, int t) { return base(i, t) + params.phi_control(t) * m1(i, t); };
  auto y10_at = [&](Eigen::Index i, int t) {
    return base(i, t) + params.phi_treated(t) * m0(i, t) + params.rho_intercept(t) +
           params.rho_slope(t) * m0(i, t);
  };
  auto y11_at = [&](Eigen::Index i, int t) {
    return base(i, t) + params.phi_treated(t) * m1(i, t) + params.rho_intercept(t) +
           params.rho_slope(t) * m1(i, t);
  };

  PanelDataset panel;
  panel.units = params.treated_units;
  panel.units.insert(panel.units.end(), params.donor_units.begin(), params.donor_units.end());
  panel.periods.resize(n_periods);
  for (int t = 0; t < n_periods; ++t) panel.periods[static_cast<std::size_t>(t)] = t + 1;
  panel.outcome.resize(static_cast<Eigen::Index>(n_units), n_periods);
  panel.mediator.resize(static_cast<Eigen::Index>(n_units), n_periods);

  for (std::size_t i = 0; i < n_units; ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    const bool treated = i < n_treated;
    for (int t = 0; t < n_periods; ++t) {
      const bool exposed = treated && t >= t_star;
      panel.mediator(row, t) = exposed ? m1(row, t) : m0(row, t);
      panel.outcome(row, t) = exposed ? y11_at(row, t) : y00_at(row, t);
    }
  }

  const Eigen::Index p = params.shared_covariates.cols();
  for (Eigen::Index k = 0; k < params.covariates.cols(); ++k) {
    const std::string name =
        (k < p ? "z" + std::to_string(k + 1) : "x" + std::to_string(k - p + 1));
    Eigen::MatrixXd column(n_units, n_periods);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_units); ++i) {
      column.row(i).setConstant(params.covariates(i, k));
    }
    panel.covariates.emplace_back(name, std::move(column));
  }

  panel.intervention_period = params.first_treated_period;
  panel.treated_units = params.treated_units;
  panel.donor_units = params.donor_units;

  GroundTruth truth;
  truth.treated_units = params.treated_units;
  const int n_post = n_periods - t_star;
  truth.post_periods.resize(static_cast<std::size_t>(n_post));
  for (int t = 0; t < n_post; ++t) truth.post_periods[static_cast<std::size_t>(t)] = t_star + t + 1;
  auto shape = [&](Eigen::MatrixXd& matrix) {
    matrix.resize(static_cast<Eigen::Index>(n_treated), n_post);
  };
  shape(truth.m0);
  shape(truth.m1);
  shape(truth.y00);
  shape(truth.y01);
  shape(truth.y10);
  shape(truth.y11);
  shape(truth.alpha);
  shape(truth.theta_m1);
  shape(truth.delta0);
  shape(truth.delta1);
  shape(truth.theta_m0);
  for (std::size_t i = 0; i < n_treated; ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    for (int t = 0; t < n_post; ++t) {
      const int period = t_star + t;
      truth.m0(row, t) = m0(row, period);
      truth.m1(row, t) = m1(row, period);
      truth.y00(row, t) = y00_at(row, period);
      truth.y01(row, t) = y01_at(row, period);
      truth.y10(row, t) = y10_at(row, period);
      truth.y11(row, t) = y11_at(row, period);
      truth.alpha(row, t) = truth.y11(row, t) - truth.y00(row, t);
      truth.theta_m1(row, t) = truth.y11(row, t) - truth.y01(row, t);
      truth.delta0(row, t) = truth.y01(row, t) - truth.y00(row, t);
      truth.delta1(row, t) = truth.y11(row, t) - truth.y10(row, t);
      truth.theta_m0(row, t) = truth.y10(row, t) - truth.y00(row, t);
    }
  }
  return {std::move(panel), std::move(truth)};
}

const BiasCell* BiasTable::find(int n_pre, const std::string& effect) const {
  for (const auto& cell : cells) {
    if (cell.n_pre == n_pre && cell.effect == effect) return &cell;
  }
  return nullptr;
}

EstimationSettings monte_carlo_settings() {
  EstimationSettings settings;
  settings.v_mode = VMode::EqualPrePost;
  settings.standardize = true;
  settings.mediator_mode = MediatorMode::single_lag(0);
  return settings;
}

DgpDesign dgp_design_from(const RawConfig& raw) {
  DgpDesign design;
  const auto* entries = raw.section("dgp");
  if (!entries) return design;
  auto as_int = [](const std::string& key, const std::string& value) {
    const auto parsed = parse_int(value);
    if (!parsed) throw Error(ErrorCode::ConfigError, "[dgp] " + key + ": bad integer");
    return static_cast<int>(*parsed);
  };
  auto as_double = [](const std::string& key, const std::string& value) {
    const auto parsed = parse_double(value);
    if (!parsed) throw Error(ErrorCode::ConfigError, "[dgp] " + key + ": bad number");
    return *parsed;
  };
  for (const auto& [key, value] : *entries) {
    if (key == "n_pre") design.n_pre = as_int(key, value);
    else if (key == "n_post") design.n_post = as_int(key, value);
    else if (key == "n_treated") design.n_treated = as_int(key, value);
    else if (key == "n_donors") design.n_donors = as_int(key, value);
    else if (key == "shared_covariates") design.n_shared_covariates = as_int(key, value);
    else if (key == "outcome_covariates") design.n_outcome_covariates = as_int(key, value);
    else if (key == "mediator_factors") design.n_mediator_factors = as_int(key, value);
    else if (key == "outcome_factors") design.n_outcome_factors = as_int(key, value);
    else if (key == "mediator_effect") design.mediator_effect = as_double(key, value);
    else if (key == "phi_control") design.phi_control = as_double(key, value);
    else if (key == "phi_treated") design.phi_treated = as_double(key, value);
    else if (key == "rho_intercept") design.rho_intercept = as_double(key, value);
    else if (key == "rho_slope") design.rho_slope = as_double(key, value);
    else if (key == "mediator_noise_sd") design.mediator_noise_sd = as_double(key, value);
    else if (key == "outcome_noise_sd") design.outcome_noise_sd = as_double(key, value);
    else if (key == "post_spread") design.post_spread = as_double(key, value);
    else if (key == "seed") design.seed = static_cast<std::uint64_t>(as_int(key, value));
    else if (key == "noise") {
      if (value == "gaussian") design.noise = NoiseKind::Gaussian;
      else if (value == "uniform") design.noise = NoiseKind::Uniform;
      else throw Error(ErrorCode::ConfigError, "[dgp] noise must be gaussian or uniform");
    } else if (key == "convex_hull") {
      design.convex_hull = value == "true" || value == "1" || value == "yes";
    } else {
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in [dgp]");
    }
  }
  return design;
}

BiasTable monte_carlo(const DgpDesign& design, const std::vector<int>& pre_period_grid, int reps,
                      std::uint64_t seed, int jobs, const EstimationSettings* settings_in) {
  if (reps < 2) throw Error(ErrorCode::DimensionMismatch, "monte_carlo needs reps >= 2");
  for (std::size_t g = 1; g < pre_period_grid.size(); ++g) {
    if (pre_period_grid[g] <= pre_period_grid[g - 1]) {
      throw Error(ErrorCode::DimensionMismatch, "pre-period grid must be ascending");
    }
  }
  const EstimationSettings settings = settings_in ? *settings_in : monte_carlo_settings();
  const bool with_delta1 = design.n_treated >= 2;

  BiasTable table;
  for (const int n_pre : pre_period_grid) {
    // One structure draw per grid cell; replications redraw only the
    // transitory shocks, so each cell estimates the shock expectation
    // conditional on the factor structure, the quantity the asymptotic
    // unbiasedness statements are about.
    DgpDesign cell_design = design;
    cell_design.n_pre = n_pre;
    cell_design.seed = derive_seed(seed, 0, static_cast<std::uint64_t>(n_pre));
    const FactorModelParams structure = draw_params(cell_design);

    const std::size_t n_effects = with_delta1 ? 4 : 3;
    std::vector<Eigen::VectorXd> bias(n_effects,
                                      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reps)));

    parallel_for(static_cast<std::size_t>(reps), jobs, [&](std::size_t rep) {
      FactorModelParams rep_params = structure;
      rep_params.noise_seed = derive_seed(seed, rep + 1, static_cast<std::uint64_t>(n_pre));
      auto [panel, truth] = simulate(rep_params);

      const std::string& unit = panel.treated_units.front();
      std::vector<std::string> others(panel.treated_units.begin() + 1, panel.treated_units.end());

      TotalEffectEstimate total =
          estimate_total(panel, unit, panel.donor_units, {}, settings);
      DirectEffectEstimate direct =
          estimate_direct(panel, unit, panel.donor_units, {}, settings);
      const Eigen::VectorXd indirect = total.alpha - direct.theta;

      const Eigen::VectorXd truth_alpha = truth.alpha.row(0).transpose();
      const Eigen::VectorXd truth_theta = truth.theta_m1.row(0).transpose();
      const Eigen::VectorXd truth_delta = truth.delta0.row(0).transpose();
      bias[0](static_cast<Eigen::Index>(rep)) = (total.alpha - truth_alpha).mean();
      bias[1](static_cast<Eigen::Index>(rep)) = (direct.theta - truth_theta).mean();
      bias[2](static_cast<Eigen::Index>(rep)) = (indirect - truth_delta).mean();

      if (with_delta1) {
        Delta1Estimate two_step =
            estimate_delta1(panel, unit, others, panel.donor_units, {}, settings);
        const Eigen::VectorXd truth_delta1 = truth.delta1.row(0).transpose();
        bias[3](static_cast<Eigen::Index>(rep)) = (two_step.delta1 - truth_delta1).mean();
      }
    });

    const char* names[] = {"alpha", "theta", "delta", "delta1"};
    for (std::size_t e = 0; e < n_effects; ++e) {
      BiasCell cell;
      cell.n_pre = n_pre;
      cell.effect = names[e];
      cell.reps = reps;
      cell.mean_bias = bias[e].mean();
      const double sd = std::sqrt((bias[e].array() - cell.mean_bias).square().sum() /
                                  static_cast<double>(reps - 1));
      cell.mc_se = sd / std::sqrt(static_cast<double>(reps));
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace masc
