#include "surfopt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "surfopt/errors.hpp"
#include "surfopt/rng.hpp"

namespace surfopt {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;

// Suite problems are solved far below the default tolerance so the analytic
// gradients are evaluated at an essentially exact optimum.
SolverParams tight_params() {
  SolverParams p;
  p.epsilon = 1e-8;
  p.max_outer = 200;
  return p;
}

struct ConstraintSystem {
  Matrix B;
  Vector b;
  std::vector<int> rows;  // indices into the full stacked system
};

ConstraintSystem constraint_system(const ColumnProblem& problem) {
  const int n = static_cast<int>(problem.mu.size());
  ConstraintSystem sys;
  if (n < 2) {
    sys.B = Matrix(0, n);
    sys.b = Vector(0);
    return sys;
  }
  if (const auto* gaps = std::get_if<BoundedGaps>(&problem.constraints)) {
    auto [b_mat, b_vec] = build_bounded_constraints(*gaps, n);
    RetainedConstraints retained = retain_finite_rows(b_mat, b_vec);
    sys.B = std::move(retained.B);
    sys.b = std::move(retained.b);
    sys.rows = std::move(retained.rows);
  } else {
    sys.B = build_adjacency_matrix(n);
    sys.b = Vector::Zero(n - 1);
    sys.rows.resize(static_cast<std::size_t>(n - 1));
    for (int i = 0; i + 1 < n; ++i) sys.rows[static_cast<std::size_t>(i)] = i;
  }
  return sys;
}

// Exhaustive enumeration core shared by the public oracle and the
// finite-difference checks: minimize 1/2 (s-mu)^T Q (s-mu) over B s <= b by
// trying every subset of rows as the active set.
Vector enumerate_qp(const Vector& mu, const Vector& q_diag, const Matrix& b_mat,
                    const Vector& b_vec) {
  const auto n = mu.size();
  const auto m = b_mat.rows();
  if (m > 20) {
    throw ValueError("active_set_oracle: too many constraint rows for exhaustive enumeration");
  }
  Vector best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask >> i & 1u) active.push_back(static_cast<int>(i));
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs = Vector::Zero(n + k);
    kkt.topLeftCorner(n, n).diagonal() = q_diag;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = b_mat.row(active[static_cast<std::size_t>(j)]).transpose();
      kkt.block(n + j, 0, 1, n) = b_mat.row(active[static_cast<std::size_t>(j)]);
      rhs[n + j] = b_vec[active[static_cast<std::size_t>(j)]];
    }
    rhs.head(n) = q_diag.cwiseProduct(mu);
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    if (!sol.allFinite()) continue;
    const Vector s = sol.head(n);
    const Vector nu = sol.tail(k);
    if (m > 0 && (b_mat * s - b_vec).maxCoeff() > kPrimalTol) continue;
    if (k > 0 && nu.minCoeff() < -kDualTol) continue;
    const double cost = 0.5 * (s - mu).dot(q_diag.cwiseProduct(s - mu));
    if (cost < best_cost) {
      best_cost = cost;
      best = s;
    }
  }
  if (!(best_cost < std::numeric_limits<double>::infinity())) {
    throw ConvergenceError("active_set_oracle: oracle-failure, no feasible candidate found");
  }
  return best;
}

}  // namespace

Vector active_set_oracle(const ColumnProblem& problem) {
  problem.validate();
  const ConstraintSystem sys = constraint_system(problem);
  return enumerate_qp(problem.mu, problem.sigma_sq.cwiseInverse(), sys.B, sys.b);
}

Vector pav_isotonic(const Vector& mu, const Vector& weights) {
  const auto n = mu.size();
  if (n < 1) throw DimensionError("pav_isotonic: empty input");
  if (weights.size() != n) throw DimensionError("pav_isotonic: weights length does not match mu");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw ValueError("pav_isotonic: weights must be positive");
  }
  std::vector<double> value;
  std::vector<double> weight;
  std::vector<Eigen::Index> count;
  for (Eigen::Index i = 0; i < n; ++i) {
    value.push_back(mu[i]);
    weight.push_back(weights[i]);
    count.push_back(1);
    while (value.size() > 1 && value[value.size() - 2] > value.back()) {
      const std::size_t a = value.size() - 2;
      const std::size_t b = value.size() - 1;
      const double w = weight[a] + weight[b];
      const double v = (value[a] * weight[a] + value[b] * weight[b]) / w;
      value[a] = v;
      weight[a] = w;
      count[a] += count[b];
      value.pop_back();
      weight.pop_back();
      count.pop_back();
    }
  }
  Vector out(n);
  Eigen::Index pos = 0;
  for (std::size_t blk = 0; blk < value.size(); ++blk) {
    for (Eigen::Index r = 0; r < count[blk]; ++r) out[pos++] = value[blk];
  }
  return out;
}

FiniteDiffGradients finite_diff_gradients(const ColumnProblem& problem, const Vector& dL_ds,
                                          double h) {
  if (!(h > 0.0)) throw ValueError("finite_diff_gradients: h must be positive");
  const auto n = problem.mu.size();
  if (dL_ds.size() != n) {
    throw DimensionError("finite_diff_gradients: dL_ds length does not match problem");
  }
  FiniteDiffGradients out;
  out.grad_mu = Vector::Zero(n);
  out.grad_q_diag = Vector::Zero(n);

  // Differentiate the exhaustively enumerated optimum rather than an iterative
  // solve: the differences then probe the solution map itself, free of solver
  // stopping error that would otherwise swamp O(h) perturbations.
  const ConstraintSystem sys = constraint_system(problem);
  const Vector q_base = problem.sigma_sq.cwiseInverse();

  auto loss_at = [&](const Vector& mu, const Vector& q_diag, const Vector& b_vec) -> double {
    try {
      return dL_ds.dot(enumerate_qp(mu, q_diag, sys.B, b_vec));
    } catch (const ConvergenceError&) {
      out.ok = false;
      return 0.0;
    }
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    Vector mu_hi = problem.mu;
    Vector mu_lo = problem.mu;
    mu_hi[i] += h;
    mu_lo[i] -= h;
    out.grad_mu[i] = (loss_at(mu_hi, q_base, sys.b) - loss_at(mu_lo, q_base, sys.b)) / (2.0 * h);
  }
  // Q is parameterized by its diagonal q_i = 1/sigma_sq_i; perturb q directly.
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector q_hi = q_base;
    Vector q_lo = q_base;
    q_hi[i] += h;
    q_lo[i] -= h;
    out.grad_q_diag[i] =
        (loss_at(problem.mu, q_hi, sys.b) - loss_at(problem.mu, q_lo, sys.b)) / (2.0 * h);
  }
  if (std::holds_alternative<BoundedGaps>(problem.constraints) && n >= 2) {
    // Perturb each retained row of the stacked bound vector b = [-min_gap; max_gap];
    // rows dropped for an infinite bound keep a zero entry.
    out.grad_b = Vector::Zero(2 * (n - 1));
    for (std::size_t r = 0; r < sys.rows.size(); ++r) {
      Vector b_hi = sys.b;
      Vector b_lo = sys.b;
      b_hi[static_cast<Eigen::Index>(r)] += h;
      b_lo[static_cast<Eigen::Index>(r)] -= h;
      out.grad_b[sys.rows[r]] =
          (loss_at(problem.mu, q_base, b_hi) - loss_at(problem.mu, q_base, b_lo)) / (2.0 * h);
    }
  } else {
    out.grad_b = Vector(0);
  }
  return out;
}

GradCheckReport run_gradcheck_suite(int n_cases, std::uint64_t seed, double degeneracy_filter,
                                    double h) {
  GradCheckReport report;
  report.n_cases = n_cases;
  Rng rng(seed);
  const SolverParams params = tight_params();

  auto rel_err = [](double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
  };

  for (int k = 0; k < n_cases; ++k) {
    const int n = rng.uniform_int(2, 6);
    ColumnProblem problem;
    problem.mu.resize(n);
    problem.sigma_sq.resize(n);
    for (int i = 0; i < n; ++i) problem.mu[i] = rng.uniform(0.0, 100.0);
    for (int i = 0; i < n; ++i) problem.sigma_sq[i] = rng.uniform(0.25, 25.0);
    if (k % 2 == 1) {
      BoundedGaps gaps;
      gaps.min_gap.resize(n - 1);
      gaps.max_gap.resize(n - 1);
      for (int i = 0; i + 1 < n; ++i) {
        gaps.min_gap[i] = rng.uniform(0.0, 3.0);
        const double width = rng.uniform(0.5, 20.0);
        const bool unbounded = rng.uniform() < 0.25;
        gaps.max_gap[i] = unbounded ? std::numeric_limits<double>::infinity()
                                    : gaps.min_gap[i] + width;
      }
      problem.constraints.emplace<BoundedGaps>(std::move(gaps));
    }
    Vector dL_ds(n);
    for (int i = 0; i < n; ++i) dL_ds[i] = rng.uniform(-1.0, 1.0);

    const Solution sol = solve_column(problem, params);
    if (!sol.converged) {
      ++report.n_skipped_degenerate;
      continue;
    }
    // Strict-complementarity filter: implicit gradients are undefined when a
    // constraint is weakly active (both multiplier and slack near zero).
    const ConstraintSystem sys = constraint_system(problem);
    const Vector dist = sys.b - sys.B * sol.s_star;
    bool degenerate = false;
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
      if (sol.lambda_star[i] <= degeneracy_filter && dist[i] <= degeneracy_filter) {
        degenerate = true;
        break;
      }
    }
    if (degenerate) {
      ++report.n_skipped_degenerate;
      continue;
    }

    const BackwardGradients analytic = backward(sol, problem, dL_ds);
    const FiniteDiffGradients numeric = finite_diff_gradients(problem, dL_ds, h);
    if (!numeric.ok) {
      ++report.n_skipped_degenerate;
      continue;
    }
    for (int i = 0; i < n; ++i) {
      report.max_rel_error_mu =
          std::max(report.max_rel_error_mu, rel_err(analytic.grad_mu[i], numeric.grad_mu[i]));
      report.max_rel_error_Q =
          std::max(report.max_rel_error_Q, rel_err(analytic.grad_q(i, i), numeric.grad_q_diag[i]));
    }
    for (Eigen::Index i = 0; i < analytic.grad_b.size(); ++i) {
      report.max_rel_error_b =
          std::max(report.max_rel_error_b, rel_err(analytic.grad_b[i], numeric.grad_b[i]));
    }
  }
  return report;
}

}  // namespace surfopt
