#include "surfopt/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "surfopt/errors.hpp"

namespace surfopt {

namespace {

constexpr double kLambdaFloor = 1e-12;   // keeps duals strictly positive after full steps
constexpr int kMaxBacktracks = 64;       // shared cap across both backtracking phases
constexpr double kMinInitMargin = 1e-9;  // strict interior even when the caller passes margin 0
constexpr double kSingularPivotRatio = 1e-12;

void check_column_inputs(const Vector& mu, const Vector& sigma_sq) {
  if (mu.size() < 1) throw DimensionError("solve: mu must have at least one entry");
  if (sigma_sq.size() != mu.size()) throw DimensionError("solve: sigma_sq length does not match mu");
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu[i])) throw ValueError("solve: mu entries must be finite");
    if (!(sigma_sq[i] > 0.0) || !std::isfinite(sigma_sq[i])) {
      throw ValueError("solve: sigma_sq entries must be positive and finite");
    }
  }
}

// r_t over a generic retained system B s <= b; no input checks (hot path).
Vector residual_general(const Vector& s, const Vector& lambda, const Vector& mu,
                        const Vector& q_diag, const Matrix& b_mat, const Vector& b_vec,
                        double t) {
  const auto n = s.size();
  const auto m = lambda.size();
  Vector r(n + m);
  r.head(n) = q_diag.cwiseProduct(s - mu) + b_mat.transpose() * lambda;
  r.tail(m) = -lambda.cwiseProduct(b_mat * s - b_vec).array() - 1.0 / t;
  return r;
}

Matrix jacobian_general(const Vector& s, const Vector& lambda, const Vector& q_diag,
                        const Matrix& b_mat, const Vector& b_vec) {
  const auto n = s.size();
  const auto m = lambda.size();
  Matrix j = Matrix::Zero(n + m, n + m);
  j.topLeftCorner(n, n).diagonal() = q_diag;
  j.topRightCorner(n, m) = b_mat.transpose();
  j.bottomLeftCorner(m, n) = (-lambda).asDiagonal() * b_mat;
  j.bottomRightCorner(m, m).diagonal() = -(b_mat * s - b_vec);
  return j;
}

// Primal-dual interior-point loop over a retained system B s <= b.
// s0 must be strictly feasible (B s0 < b componentwise).
Solution solve_general(const Vector& mu, const Vector& q_diag, const Matrix& b_mat,
                       const Vector& b_vec, Vector s, const SolverParams& params,
                       std::vector<int> rows) {
  const auto n = mu.size();
  const auto m = b_mat.rows();
  Solution out;
  out.constraint_rows = std::move(rows);

  if (m == 0) {
    // No inequality rows: the unconstrained minimizer is exact.
    out.s_star = mu;
    out.lambda_star = Vector(0);
    out.iterations = 0;
    out.residual_norm = 0.0;
    out.t_final = 0.0;
    out.converged = true;
    Matrix q = Matrix::Zero(n, n);
    q.diagonal() = q_diag;
    auto kkt = std::make_shared<KktFactorization>(q);
    out.used_pseudo_inverse = kkt->used_pseudo_inverse();
    out.kkt = std::move(kkt);
    return out;
  }

  Vector lambda = Vector::Constant(m, params.lambda0);
  bool any_pinv = false;
  double rn = std::numeric_limits<double>::infinity();
  double t = 0.0;
  int it = 1;
  for (; it <= params.max_outer; ++it) {
    const Vector slack = b_mat * s - b_vec;  // strictly negative at entry
    t = -params.beta3 * static_cast<double>(m) / slack.dot(lambda);
    const Vector r0 = residual_general(s, lambda, mu, q_diag, b_mat, b_vec, t);
    const double r0n = r0.norm();
    KktFactorization jf(jacobian_general(s, lambda, q_diag, b_mat, b_vec));
    any_pinv = any_pinv || jf.used_pseudo_inverse();
    const Vector step = jf.solve(-r0);
    const Vector ds = step.head(n);
    const Vector dl = step.tail(m);

    // Longest step keeping lambda nonnegative.
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dl[i] < 0.0) alpha = std::min(alpha, -lambda[i] / dl[i]);
    }
    // Backtrack until the primal iterate is strictly feasible.
    int bt = 0;
    while (bt < kMaxBacktracks && (b_mat * (s + alpha * ds) - b_vec).maxCoeff() >= 0.0) {
      alpha *= params.beta1;
      ++bt;
    }
    Vector s_new = s + alpha * ds;
    Vector l_new = (lambda + alpha * dl).cwiseMax(kLambdaFloor);
    // Backtrack until the residual norm satisfies the sufficient-decrease test.
    while (bt < kMaxBacktracks &&
           residual_general(s_new, l_new, mu, q_diag, b_mat, b_vec, t).norm() >
               (1.0 - params.beta2 * alpha) * r0n) {
      alpha *= params.beta1;
      ++bt;
      s_new = s + alpha * ds;
      l_new = (lambda + alpha * dl).cwiseMax(kLambdaFloor);
    }
    s = std::move(s_new);
    lambda = std::move(l_new);
    rn = residual_general(s, lambda, mu, q_diag, b_mat, b_vec, t).norm();
    if (rn < params.epsilon) break;
  }
  if (it > params.max_outer) it = params.max_outer;

  out.s_star = s;
  out.lambda_star = lambda;
  out.iterations = it;
  out.residual_norm = rn;
  out.t_final = t;
  out.converged = rn < params.epsilon;
  // Re-factor at the returned iterate so backward() differentiates the system
  // that actually holds at (s*, lambda*).
  auto kkt = std::make_shared<KktFactorization>(
      jacobian_general(s, lambda, q_diag, b_mat, b_vec));
  out.used_pseudo_inverse = any_pinv || kkt->used_pseudo_inverse();
  out.kkt = std::move(kkt);
  return out;
}

}  // namespace

KktFactorization::KktFactorization(const Matrix& j) : lu_(j) {
  const Vector pivots = lu_.matrixLU().diagonal().cwiseAbs();
  const double max_pivot = pivots.size() ? pivots.maxCoeff() : 0.0;
  const double min_pivot = pivots.size() ? pivots.minCoeff() : 0.0;
  if (!(max_pivot > 0.0) || min_pivot < kSingularPivotRatio * max_pivot) {
    use_svd_ = true;
    svd_.emplace(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  }
}

Vector KktFactorization::solve(const Vector& rhs) const {
  if (!use_svd_) return lu_.solve(rhs);
  return svd_->solve(rhs);
}

Vector KktFactorization::solve_transpose(const Vector& rhs) const {
  if (!use_svd_) return lu_.transpose().solve(rhs);
  // pinv(J^T) = U pinv(S) V^T from J = U S V^T.
  const Vector& sv = svd_->singularValues();
  const double tol = svd_->threshold() * (sv.size() ? sv[0] : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) inv[i] = 1.0 / sv[i];
  }
  return svd_->matrixU() * inv.cwiseProduct(svd_->matrixV().transpose() * rhs);
}

std::vector<int> lis_keep_indices(const Vector& mu) {
  const int n = static_cast<int>(mu.size());
  if (n < 1) throw DimensionError("lis_keep_indices: mu must have at least one entry");
  // len[i] = length of the longest non-decreasing run starting at i.
  std::vector<int> len(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) {
      if (mu[j] >= mu[i] && len[static_cast<std::size_t>(j)] + 1 > len[static_cast<std::size_t>(i)]) {
        len[static_cast<std::size_t>(i)] = len[static_cast<std::size_t>(j)] + 1;
      }
    }
  }
  const int start = static_cast<int>(
      std::max_element(len.begin(), len.end()) - len.begin());
  std::vector<int> kept{start};
  int cur = start;
  while (len[static_cast<std::size_t>(cur)] > 1) {
    int best = -1;
    for (int j = cur + 1; j < n; ++j) {
      if (mu[j] >= mu[cur] && len[static_cast<std::size_t>(j)] == len[static_cast<std::size_t>(cur)] - 1 &&
          (best < 0 || mu[j] < mu[best])) {
        best = j;
      }
    }
    kept.push_back(best);
    cur = best;
  }
  return kept;
}

Vector lis_initialize(const Vector& mu, double margin) {
  if (mu.size() < 1) throw DimensionError("lis_initialize: mu must have at least one entry");
  if (!(margin >= 0.0)) throw ValueError("lis_initialize: margin must be nonnegative");
  const double m = std::max(margin, kMinInitMargin);
  const std::vector<int> kept = lis_keep_indices(mu);
  const int n = static_cast<int>(mu.size());
  std::vector<bool> is_kept(static_cast<std::size_t>(n), false);
  for (int k : kept) is_kept[static_cast<std::size_t>(k)] = true;
  Vector s(n);
  const int first = kept.front();
  double cur = mu[first];
  for (int i = 0; i < n; ++i) {
    if (is_kept[static_cast<std::size_t>(i)]) cur = mu[i];
    s[i] = (i < first) ? mu[first] : cur;  // head borrows the first kept value
  }
  for (int i = 0; i + 1 < n; ++i) {
    s[i + 1] = std::max(s[i + 1], s[i] + m);
  }
  return s;
}

Vector lis_initialize_bounded(const Vector& mu, const BoundedGaps& gaps, double margin) {
  const int n = static_cast<int>(mu.size());
  if (gaps.min_gap.size() != n - 1 || gaps.max_gap.size() != n - 1) {
    throw DimensionError("lis_initialize_bounded: gap bounds must have length N-1");
  }
  Vector s = lis_initialize(mu, margin);
  const double me_base = std::max(margin, kMinInitMargin);
  for (int i = 0; i + 1 < n; ++i) {
    const double lo_gap = gaps.min_gap[i];
    const double hi_gap = gaps.max_gap[i];
    if (!(lo_gap < hi_gap)) {
      throw InfeasibleError(
          "lis_initialize_bounded: infeasible-interior, min_gap equals max_gap");
    }
    const double me = std::isfinite(hi_gap) ? std::min(me_base, (hi_gap - lo_gap) / 4.0) : me_base;
    const double lo = s[i] + lo_gap + me;
    const double hi = std::isfinite(hi_gap) ? s[i] + hi_gap - me
                                            : std::numeric_limits<double>::infinity();
    s[i + 1] = std::min(std::max(s[i + 1], lo), hi);
  }
  return s;
}

Vector ipm_residual(const Vector& s, const Vector& lambda, const Vector& mu,
                    const Vector& q_diag, double t) {
  const auto n = s.size();
  if (n < 2) throw DimensionError("ipm_residual: need at least two surfaces");
  if (mu.size() != n || q_diag.size() != n) {
    throw DimensionError("ipm_residual: mu/q_diag length does not match s");
  }
  if (lambda.size() != n - 1) throw DimensionError("ipm_residual: lambda must have length N-1");
  if (!(t > 0.0)) throw ValueError("ipm_residual: invalid-parameter, t must be positive");
  return residual_general(s, lambda, mu, q_diag, build_adjacency_matrix(static_cast<int>(n)),
                          Vector::Zero(n - 1), t);
}

Vector ipm_residual_bounded(const Vector& s, const Vector& lambda, const Vector& mu,
                            const Vector& q_diag, const Matrix& b_mat, const Vector& b_vec,
                            double t) {
  const auto n = s.size();
  if (mu.size() != n || q_diag.size() != n) {
    throw DimensionError("ipm_residual_bounded: mu/q_diag length does not match s");
  }
  if (b_mat.cols() != n || b_mat.rows() != lambda.size() || b_vec.size() != lambda.size()) {
    throw DimensionError("ipm_residual_bounded: constraint system shape mismatch");
  }
  if (!(t > 0.0)) throw ValueError("ipm_residual_bounded: invalid-parameter, t must be positive");
  return residual_general(s, lambda, mu, q_diag, b_mat, b_vec, t);
}

Matrix kkt_jacobian(const Vector& s, const Vector& lambda, const Vector& q_diag) {
  const auto n = s.size();
  if (n < 2) throw DimensionError("kkt_jacobian: need at least two surfaces");
  if (q_diag.size() != n) throw DimensionError("kkt_jacobian: q_diag length does not match s");
  if (lambda.size() != n - 1) throw DimensionError("kkt_jacobian: lambda must have length N-1");
  return jacobian_general(s, lambda, q_diag, build_adjacency_matrix(static_cast<int>(n)),
                          Vector::Zero(n - 1));
}

Matrix kkt_jacobian_bounded(const Vector& s, const Vector& lambda, const Vector& q_diag,
                            const Matrix& b_mat, const Vector& b_vec) {
  if (q_diag.size() != s.size()) {
    throw DimensionError("kkt_jacobian_bounded: q_diag length does not match s");
  }
  if (b_mat.cols() != s.size() || b_mat.rows() != lambda.size() || b_vec.size() != lambda.size()) {
    throw DimensionError("kkt_jacobian_bounded: constraint system shape mismatch");
  }
  return jacobian_general(s, lambda, q_diag, b_mat, b_vec);
}

Solution solve_forward(const Vector& mu, const Vector& sigma_sq, const SolverParams& params) {
  params.validate();
  check_column_inputs(mu, sigma_sq);
  const int n = static_cast<int>(mu.size());
  const Vector q_diag = sigma_sq.cwiseInverse();
  if (n == 1) {
    return solve_general(mu, q_diag, Matrix(0, 1), Vector(0), mu, params, {});
  }
  std::vector<int> rows(static_cast<std::size_t>(n - 1));
  std::iota(rows.begin(), rows.end(), 0);
  return solve_general(mu, q_diag, build_adjacency_matrix(n), Vector::Zero(n - 1),
                       lis_initialize(mu, params.feasibility_margin), params, std::move(rows));
}

Solution solve_forward_bounded(const Vector& mu, const Vector& sigma_sq, const BoundedGaps& gaps,
                               const SolverParams& params) {
  params.validate();
  check_column_inputs(mu, sigma_sq);
  const int n = static_cast<int>(mu.size());
  if (gaps.min_gap.size() != n - 1 || gaps.max_gap.size() != n - 1) {
    throw DimensionError("solve_forward_bounded: gap bounds must have length N-1");
  }
  const Vector q_diag = sigma_sq.cwiseInverse();
  if (n == 1) {
    return solve_general(mu, q_diag, Matrix(0, 1), Vector(0), mu, params, {});
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (gaps.min_gap[i] > gaps.max_gap[i]) {
      throw InfeasibleError("solve_forward_bounded: infeasible-spec, min_gap exceeds max_gap");
    }
    if (gaps.min_gap[i] == gaps.max_gap[i]) {
      throw InfeasibleError(
          "solve_forward_bounded: infeasible-interior, gap bounds admit no strict slack");
    }
  }
  auto [b_mat, b_vec] = build_bounded_constraints(gaps, n);
  RetainedConstraints retained = retain_finite_rows(b_mat, b_vec);
  Vector s0 = lis_initialize_bounded(mu, gaps, params.feasibility_margin);
  return solve_general(mu, q_diag, retained.B, retained.b, std::move(s0), params,
                       std::move(retained.rows));
}

Solution solve_column(const ColumnProblem& problem, const SolverParams& params) {
  problem.validate();
  return std::visit(
      [&](const auto& spec) -> Solution {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, AdjacencyOnly>) {
          return solve_forward(problem.mu, problem.sigma_sq, params);
        } else {
          return solve_forward_bounded(problem.mu, problem.sigma_sq, spec, params);
        }
      },
      problem.constraints);
}

BackwardGradients backward(const Solution& sol, const ColumnProblem& problem,
                           const Vector& dL_ds) {
  if (!sol.converged) {
    throw StaleSolutionError("backward: stale-solution, forward solve did not converge");
  }
  if (!sol.kkt) {
    throw ValueError("backward: solution carries no KKT factorization");
  }
  const auto n = sol.s_star.size();
  if (problem.mu.size() != n || problem.sigma_sq.size() != n) {
    throw DimensionError("backward: problem does not match solution size");
  }
  if (dL_ds.size() != n) throw DimensionError("backward: dL_ds length does not match solution");
  const auto m = sol.lambda_star.size();

  Vector rhs = Vector::Zero(n + m);
  rhs.head(n) = -dL_ds;
  const Vector d = sol.kkt->solve_transpose(rhs);
  const Vector d_s = d.head(n);
  const Vector d_lambda = d.tail(m);

  BackwardGradients g;
  const Vector q_diag = problem.sigma_sq.cwiseInverse();
  g.grad_mu = -q_diag.cwiseProduct(d_s);
  g.grad_q = d_s * (sol.s_star - problem.mu).transpose();
  if (std::holds_alternative<BoundedGaps>(problem.constraints)) {
    g.grad_b = Vector::Zero(2 * (n - 1));
    for (Eigen::Index k = 0; k < m; ++k) {
      g.grad_b[sol.constraint_rows[static_cast<std::size_t>(k)]] =
          sol.lambda_star[k] * d_lambda[k];
    }
  } else {
    g.grad_b = Vector(0);
  }
  return g;
}

std::pair<Solution, BackwardGradients> solve_and_grad(const ColumnProblem& problem,
                                                      const Vector& dL_ds,
                                                      const SolverParams& params) {
  Solution sol = solve_column(problem, params);
  BackwardGradients g = backward(sol, problem, dL_ds);
  return {std::move(sol), std::move(g)};
}

}  // namespace surfopt
