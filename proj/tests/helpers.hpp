#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <string>
#include <vector>

#include "masc/config.hpp"
#include "masc/panel.hpp"
#include "masc/random.hpp"

namespace masc::testing {

// Builds a designated panel straight from matrices (units x periods).
inline PanelDataset make_panel(std::vector<std::string> units, std::vector<int> periods,
                               Eigen::MatrixXd outcome, Eigen::MatrixXd mediator,
                               std::vector<std::string> treated, std::vector<std::string> donors,
                               int intervention) {
  PanelDataset panel;
  panel.units = std::move(units);
  panel.periods = std::move(periods);
  panel.outcome = std::move(outcome);
  panel.mediator = std::move(mediator);
  panel.treated_units = std::move(treated);
  panel.donor_units = std::move(donors);
  panel.intervention_period = intervention;
  return panel;
}

// Random panel whose first unit is an exact convex combination of the donors
// in outcome and mediator at every period, with effect_total added to its
// post-period outcomes and effect_mediator to its post-period mediators.
inline PanelDataset hull_panel(std::size_t n_donors, std::size_t n_pre, std::size_t n_post,
                               double effect_total, double effect_mediator, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_periods = n_pre + n_post;
  Eigen::MatrixXd outcome(n_donors + 1, n_periods);
  Eigen::MatrixXd mediator(n_donors + 1, n_periods);
  for (std::size_t d = 0; d < n_donors; ++d) {
    for (std::size_t t = 0; t < n_periods; ++t) {
      outcome(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
      mediator(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(t)) = rng.normal(0, 2);
    }
  }
  const std::vector<double> combo = rng.simplex_point(n_donors);
  for (std::size_t t = 0; t < n_periods; ++t) {
    double y = 0.0, m = 0.0;
    for (std::size_t d = 0; d < n_donors; ++d) {
      y += combo[d] * outcome(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(t));
      m += combo[d] * mediator(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(t));
    }
    if (t >= n_pre) {
      y += effect_total;
      m += effect_mediator;
    }
    outcome(0, static_cast<Eigen::Index>(t)) = y;
    mediator(0, static_cast<Eigen::Index>(t)) = m;
  }

  std::vector<std::string> units = {"treated"};
  std::vector<std::string> donors;
  for (std::size_t d = 0; d < n_donors; ++d) {
    donors.push_back("donor" + std::to_string(d + 1));
    units.push_back(donors.back());
  }
  std::vector<int> periods(n_periods);
  for (std::size_t t = 0; t < n_periods; ++t) periods[t] = static_cast<int>(t + 1);
  return make_panel(units, periods, outcome, mediator, {"treated"}, donors,
                    static_cast<int>(n_pre + 1));
}

inline EstimationConfig config_for(const PanelDataset& panel) {
  EstimationConfig config;
  config.treated = panel.treated_units;
  config.donors = panel.donor_units;
  config.intervention_period = panel.intervention_period;
  return config;
}

}  // namespace masc::testing
