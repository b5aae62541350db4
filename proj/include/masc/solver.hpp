#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "masc/errors.hpp"
#include "masc/predictor.hpp"

namespace masc {

// Simplex-constrained donor weights. Output weights are clamped to zero below
// 1e-12 in magnitude and sum to one within 1e-10.
struct WeightVector {
  std::vector<std::string> donor_ids;
  Eigen::VectorXd weights;

  double weight_for(std::string_view donor) const;
};

struct SolverReport {
  double objective = 0.0;      // achieved V-weighted distance (with the given V)
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-10;  // on the normalized KKT residual
  int max_iter = 0;          // 0 => 10 * (donors + labels)
};

struct SolveResult {
  Eigen::VectorXd weights;
  SolverReport report;
};

// Solves min_w sqrt((omega1 - omega0' w)' V (omega1 - omega0' w)) subject to
// w >= 0 and sum(w) = 1, by an exact active-set method (sequential
// non-negative least squares on the simplex) with a projected-gradient
// fallback. Ties between optimal weight vectors (collinear donors) resolve to
// the minimum-Euclidean-norm solution. The argmin is invariant to positive
// rescaling of V.
SolveResult solve_simplex_wls(const Eigen::VectorXd& omega1,
                              const Eigen::MatrixXd& omega0,
                              const Eigen::VectorXd& v_diagonal,
                              const SolverOptions& opts = {});

// Convenience overload for assembled target sets; attaches donor ids.
std::pair<WeightVector, SolverReport> solve_simplex_wls(const TargetSet& targets,
                                                        const VWeights& v,
                                                        const SolverOptions& opts = {});

// The V-weighted distance sqrt((omega1 - omega0' w)' V (omega1 - omega0' w)).
double objective(const Eigen::VectorXd& omega1, const Eigen::MatrixXd& omega0,
                 const Eigen::VectorXd& v_diagonal, const Eigen::VectorXd& weights);

}  // namespace masc
