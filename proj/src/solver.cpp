#include "masc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace masc {

namespace {

constexpr double kFeasTol = 1e-12;

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0;
  double tau = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    running += u[static_cast<std::size_t>(i)];
    const double candidate = (running - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - candidate > 0.0) tau = candidate;
  }
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::max(0.0, v(i) - tau);
  return v;
}

// Minimum-norm solution of the equality-constrained QP on the free set:
//   min w' B_FF w - 2 c_F' w   s.t.  1' w = 1.
// Rank-deficient directions (collinear donors) are resolved to the
// minimum-norm point, the zero-ridge limit of the 1e-12 tie-breaking term.
Eigen::VectorXd solve_equality_qp(const Eigen::MatrixXd& b, const Eigen::VectorXd& c,
                                  const std::vector<Eigen::Index>& free, double* multiplier) {
  const Eigen::Index f = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd kkt(f + 1, f + 1);
  Eigen::VectorXd rhs(f + 1);
  for (Eigen::Index i = 0; i < f; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) kkt(i, j) = 2.0 * b(free[i], free[j]);
    kkt(i, f) = -1.0;
    kkt(f, i) = 1.0;
    rhs(i) = 2.0 * c(free[i]);
  }
  kkt(f, f) = 0.0;
  rhs(f) = 1.0;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
  cod.setThreshold(1e-9);
  const Eigen::VectorXd solution = cod.solve(rhs);
  if (multiplier) *multiplier = solution(f);
  return solution.head(f);
}

double kkt_residual(const Eigen::VectorXd& gradient, const Eigen::VectorXd& w, double nu) {
  double residual = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) > kFeasTol) {
      residual = std::max(residual, std::abs(gradient(j) - nu));
    } else {
      residual = std::max(residual, std::max(0.0, nu - gradient(j)));
    }
  }
  const double scale = std::max(1.0, gradient.cwiseAbs().maxCoeff());
  return residual / scale;
}

// Multiplier consistent with the current support: average gradient over
// clearly-free coordinates.
double support_multiplier(const Eigen::VectorXd& gradient, const Eigen::VectorXd& w) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) > 1e-9) {
      sum += gradient(j);
      ++count;
    }
  }
  return count ? sum / count : gradient.minCoeff();
}

}  // namespace

double WeightVector::weight_for(std::string_view donor) const {
  for (std::size_t i = 0; i < donor_ids.size(); ++i) {
    if (donor_ids[i] == donor) return weights(static_cast<Eigen::Index>(i));
  }
  return 0.0;
}

double objective(const Eigen::VectorXd& omega1, const Eigen::MatrixXd& omega0,
                 const Eigen::VectorXd& v_diagonal, const Eigen::VectorXd& weights) {
  if (omega0.cols() != omega1.size() || v_diagonal.size() != omega1.size() ||
      omega0.rows() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "objective() arguments are inconsistent");
  }
  const Eigen::VectorXd residual = omega1 - omega0.transpose() * weights;
  const double value = residual.cwiseProduct(v_diagonal).dot(residual);
  return std::sqrt(std::max(0.0, value));
}

SolveResult solve_simplex_wls(const Eigen::VectorXd& omega1, const Eigen::MatrixXd& omega0,
                              const Eigen::VectorXd& v_diagonal, const SolverOptions& opts) {
  const Eigen::Index m = omega0.rows();
  const Eigen::Index k = omega0.cols();
  if (k != omega1.size() || k != v_diagonal.size() || m < 1 || k < 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "solver needs omega0 of shape donors x labels matching omega1 and V");
  }

  SolveResult result;
  if (m == 1) {
    result.weights = Eigen::VectorXd::Ones(1);
    result.report.objective = objective(omega1, omega0, v_diagonal, result.weights);
    result.report.converged = true;
    return result;
  }

  // The argmin is invariant to positive rescaling of V; normalize up front so
  // tolerances act on a problem of unit weight mass.
  const double v_total = v_diagonal.sum();
  if (!(v_total > 0.0)) throw Error(ErrorCode::DimensionMismatch, "V must be positive");
  const Eigen::VectorXd v = v_diagonal / v_total;

  const Eigen::MatrixXd scaled = omega0 * v.asDiagonal();
  const Eigen::MatrixXd b = scaled * omega0.transpose();
  const Eigen::VectorXd c = scaled * omega1;

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * static_cast<int>(m + k);

  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  std::vector<bool> active(static_cast<std::size_t>(m), false);
  int iterations = 0;
  double nu = 0.0;

  auto free_indices = [&] {
    std::vector<Eigen::Index> free;
    free.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!active[static_cast<std::size_t>(j)]) free.push_back(j);
    }
    return free;
  };

  while (iterations < max_iter) {
    ++iterations;
    const std::vector<Eigen::Index> free = free_indices();
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(m);
    const Eigen::VectorXd w_free = solve_equality_qp(b, c, free, &nu);
    for (std::size_t i = 0; i < free.size(); ++i) candidate(free[i]) = w_free(static_cast<Eigen::Index>(i));

    const double min_free = [&] {
      double lo = std::numeric_limits<double>::infinity();
      for (const Eigen::Index j : free) lo = std::min(lo, candidate(j));
      return lo;
    }();

    if (min_free >= -1e-11) {
      w = candidate.cwiseMax(0.0);
      // Optimal on the current face; look for an active coordinate whose
      // multiplier says it should re-enter.
      const Eigen::VectorXd gradient = 2.0 * (b * w - c);
      Eigen::Index entering = -1;
      double worst = -opts.tolerance * std::max(1.0, gradient.cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        const double slack = gradient(j) - nu;
        if (slack < worst) {
          worst = slack;
          entering = j;
        }
      }
      if (entering < 0) {
        result.weights = w;
        result.report.iterations = iterations;
        result.report.kkt_residual = kkt_residual(gradient, w, nu);
        result.report.converged = result.report.kkt_residual <= opts.tolerance;
        break;
      }
      active[static_cast<std::size_t>(entering)] = false;
      continue;
    }

    // Blocked: step from w toward the candidate until the first free
    // coordinate hits zero, then fix it at the bound.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (const Eigen::Index j : free) {
      if (candidate(j) < -kFeasTol && w(j) > candidate(j)) {
        const double step = w(j) / (w(j) - candidate(j));
        if (step < alpha) {
          alpha = step;
          blocking = j;
        }
      }
    }
    if (blocking < 0) {
      w = candidate.cwiseMax(0.0);
      continue;
    }
    w += alpha * (candidate - w);
    w(blocking) = 0.0;
    active[static_cast<std::size_t>(blocking)] = true;
    for (const Eigen::Index j : free) {
      if (j != blocking && w(j) < kFeasTol) {
        w(j) = 0.0;
        active[static_cast<std::size_t>(j)] = true;
      }
    }
  }

  if (result.weights.size() == 0) {
    // Active-set budget exhausted; fall back to projected gradient.
    const double lipschitz = 2.0 * b.cwiseAbs().rowwise().sum().maxCoeff() + 1e-30;
    double step = 1.0 / lipschitz;
    Eigen::VectorXd pg = project_simplex(w);
    for (int it = 0; it < 50 * max_iter; ++it) {
      const Eigen::VectorXd gradient = 2.0 * (b * pg - c);
      const Eigen::VectorXd next = project_simplex(pg - step * gradient);
      if ((next - pg).cwiseAbs().maxCoeff() < 1e-14) {
        pg = next;
        break;
      }
      pg = next;
      ++iterations;
    }
    const Eigen::VectorXd gradient = 2.0 * (b * pg - c);
    nu = support_multiplier(gradient, pg);
    result.weights = pg;
    result.report.iterations = iterations;
    result.report.kkt_residual = kkt_residual(gradient, pg, nu);
    result.report.converged = result.report.kkt_residual <= opts.tolerance;
  }

  // Output invariants: negatives clamp to zero, the sum stays within 1e-10.
  for (Eigen::Index j = 0; j < m; ++j) {
    if (result.weights(j) < 0.0) result.weights(j) = 0.0;
  }
  const double total = result.weights.sum();
  if (std::abs(total - 1.0) > 1e-12 && total > 0.0) result.weights /= total;

  result.report.objective = objective(omega1, omega0, v_diagonal, result.weights);
  return result;
}

std::pair<WeightVector, SolverReport> solve_simplex_wls(const TargetSet& targets,
                                                        const VWeights& v,
                                                        const SolverOptions& opts) {
  SolveResult solved = solve_simplex_wls(targets.treated, targets.donors, v.diagonal, opts);
  WeightVector weights;
  weights.donor_ids = targets.donor_ids;
  weights.weights = std::move(solved.weights);
  return {std::move(weights), solved.report};
}

}  // namespace masc
