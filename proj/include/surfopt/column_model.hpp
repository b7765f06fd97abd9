#pragma once

#include <Eigen/Dense>
#include <utility>
#include <variant>
#include <vector>

#include "surfopt/errors.hpp"

namespace surfopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordering-only constraint set {s : s_i <= s_{i+1} for all i}.
struct AdjacencyOnly {};

/// Per-pair gap bounds: min_gap[i] <= s_{i+1} - s_i <= max_gap[i].
/// max_gap entries may be +infinity (no upper bound on that pair).
struct BoundedGaps {
  Vector min_gap;  // delta, length N-1, nonnegative
  Vector max_gap;  // Delta, length N-1
};

using ConstraintSpec = std::variant<AdjacencyOnly, BoundedGaps>;

/// One image column's QP data: minimize 1/2 (s-mu)^T Q (s-mu) subject to the
/// constraint spec, with Q = diag(1/sigma_sq).
struct ColumnProblem {
  Vector mu;         // surface position means, pixels
  Vector sigma_sq;   // per-surface variance, pixels^2
  ConstraintSpec constraints = AdjacencyOnly{};

  int num_surfaces() const { return static_cast<int>(mu.size()); }

  /// Diagonal of Q; formed lazily since sigma_sq is the stored quantity.
  Vector q_diag() const { return sigma_sq.cwiseInverse(); }

  /// Throws DimensionError / ValueError / InfeasibleError on bad data.
  void validate() const;
};

/// Interior point solver settings. Defaults follow the reference settings;
/// epsilon is the residual-norm stopping tolerance and feasibility_margin the
/// strict-slack floor used when building the initial iterate.
struct SolverParams {
  double beta1 = 0.5;    // step backtracking factor, in (0,1)
  double beta2 = 0.055;  // residual decrease coefficient, in (0,1)
  double beta3 = 10.0;   // barrier growth factor, > 1
  double epsilon = 0.01;
  int max_outer = 50;
  double lambda0 = 1.0;
  double feasibility_margin = 1e-3;

  void validate() const;
};

/// Adjacency difference matrix: row i has +1 at column i and -1 at column
/// i+1, so (A*s)_i = s_i - s_{i+1} and feasibility reads A*s <= 0.
Matrix build_adjacency_matrix(int n);

/// Stacked two-sided gap system (B, b) with B = [A; -A] and b = [-delta;
/// Delta]; B*s <= b is equivalent to delta_i <= s_{i+1} - s_i <= Delta_i.
/// Rows for infinite Delta carry +infinity in b.
std::pair<Matrix, Vector> build_bounded_constraints(const BoundedGaps& gaps, int n);

/// Finite-bound subset of a (B, b) system. rows[k] is the index of retained
/// row k in the original stacking, so duals and bound gradients can be mapped
/// back after infinite rows are dropped.
struct RetainedConstraints {
  Matrix B;
  Vector b;
  std::vector<int> rows;
};

RetainedConstraints retain_finite_rows(const Matrix& B, const Vector& b);

/// Objective value sum_i (s_i - mu_i)^2 / (2 sigma_sq_i).
double surface_cost(const Vector& s, const Vector& mu, const Vector& sigma_sq);

}  // namespace surfopt
