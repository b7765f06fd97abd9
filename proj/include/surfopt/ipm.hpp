#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"

namespace surfopt {

/// Factorization of a KKT system matrix, reusable for forward and transpose solves.
///
/// Uses full-pivot LU by default; when the matrix is numerically singular
/// (smallest pivot below 1e-12 times the largest) the solves fall back to a
/// pseudo-inverse built from the SVD.
class KktFactorization {
 public:
  explicit KktFactorization(const Matrix& j);

  /// Solve J x = rhs.
  Vector solve(const Vector& rhs) const;

  /// Solve J^T x = rhs.
  Vector solve_transpose(const Vector& rhs) const;

  /// True when the LU pivots were unusable and the SVD fallback is active.
  bool used_pseudo_inverse() const { return use_svd_; }

  Eigen::Index rows() const { return lu_.rows(); }

 private:
  Eigen::FullPivLU<Matrix> lu_;
  std::optional<Eigen::JacobiSVD<Matrix>> svd_;
  bool use_svd_ = false;
};

/// Result of one interior-point solve for a single column.
struct Solution {
  Vector s_star;       ///< Optimal surface positions (length N).
  Vector lambda_star;  ///< Dual multipliers for the retained inequality rows (length m).
  /// KKT matrix factorization evaluated at (s_star, lambda_star), shared with backward().
  std::shared_ptr<const KktFactorization> kkt;
  int iterations = 0;
  double residual_norm = 0.0;
  double t_final = 0.0;
  bool converged = false;
  bool used_pseudo_inverse = false;
  /// Row indices of the full constraint system that were retained (finite bound).
  /// For the adjacency-only model this is simply 0..N-2.
  std::vector<int> constraint_rows;
};

/// Gradients of a scalar loss with respect to the column problem data.
struct BackwardGradients {
  Vector grad_mu;  ///< dL/dmu (length N).
  Matrix grad_q;   ///< dL/dQ as a dense N x N matrix (Q is the precision matrix).
  Vector grad_b;   ///< dL/db over the full constraint rows; zero on dropped rows.
};

/// Indices kept by the longest non-decreasing subsequence used to seed the solver.
std::vector<int> lis_keep_indices(const Vector& mu);

/// Ordered starting point: keep a longest non-decreasing subsequence of mu,
/// fill the remaining entries from the nearest kept value to the left, then
/// sweep forward to enforce strictly increasing positions with the given margin.
Vector lis_initialize(const Vector& mu, double margin);

/// Same seeding for gap-bounded problems: the forward sweep clamps each
/// position into [prev + min_gap + m, prev + max_gap - m] with
/// m = min(margin, (max_gap - min_gap) / 4).
Vector lis_initialize_bounded(const Vector& mu, const BoundedGaps& gaps, double margin);

/// Modified KKT residual r_t(s, lambda) for the adjacency-only model.
/// Throws if t is not positive.
Vector ipm_residual(const Vector& s, const Vector& lambda, const Vector& mu,
                    const Vector& q_diag, double t);

/// Modified KKT residual for a general retained constraint system B s <= b.
Vector ipm_residual_bounded(const Vector& s, const Vector& lambda, const Vector& mu,
                            const Vector& q_diag, const Matrix& b_mat, const Vector& b_vec,
                            double t);

/// Jacobian of the modified KKT residual for the adjacency-only model.
Matrix kkt_jacobian(const Vector& s, const Vector& lambda, const Vector& q_diag);

/// Jacobian of the modified KKT residual for a retained constraint system.
Matrix kkt_jacobian_bounded(const Vector& s, const Vector& lambda, const Vector& q_diag,
                            const Matrix& b_mat, const Vector& b_vec);

/// Solve the adjacency-only column problem with the primal-dual interior-point loop.
Solution solve_forward(const Vector& mu, const Vector& sigma_sq, const SolverParams& params = {});

/// Solve the gap-bounded column problem. Rows with an infinite bound are
/// dropped before solving; Solution::constraint_rows records the mapping.
Solution solve_forward_bounded(const Vector& mu, const Vector& sigma_sq, const BoundedGaps& gaps,
                               const SolverParams& params = {});

/// Dispatch on the problem's constraint spec.
Solution solve_column(const ColumnProblem& problem, const SolverParams& params = {});

/// Exact gradients via implicit differentiation of the KKT system at the
/// returned optimum. Throws StaleSolutionError when the solution did not
/// converge.
BackwardGradients backward(const Solution& sol, const ColumnProblem& problem,
                           const Vector& dL_ds);

/// Convenience wrapper: forward solve followed by backward().
std::pair<Solution, BackwardGradients> solve_and_grad(const ColumnProblem& problem,
                                                      const Vector& dL_ds,
                                                      const SolverParams& params = {});

}  // namespace surfopt
