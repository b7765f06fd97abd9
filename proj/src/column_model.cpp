#include "surfopt/column_model.hpp"

#include <cmath>
#include <limits>

namespace surfopt {

void ColumnProblem::validate() const {
  const auto n = mu.size();
  if (n < 1) {
    throw DimensionError("ColumnProblem: mu must have at least one entry");
  }
  if (sigma_sq.size() != n) {
    throw DimensionError("ColumnProblem: sigma_sq length does not match mu");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(mu[i])) {
      throw ValueError("ColumnProblem: mu entries must be finite");
    }
    if (!(sigma_sq[i] > 0.0) || !std::isfinite(sigma_sq[i])) {
      throw ValueError("ColumnProblem: sigma_sq entries must be positive and finite");
    }
  }
  if (const auto* gaps = std::get_if<BoundedGaps>(&constraints)) {
    if (gaps->min_gap.size() != n - 1 || gaps->max_gap.size() != n - 1) {
      throw DimensionError("ColumnProblem: gap bounds must have length N-1");
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!(gaps->min_gap[i] >= 0.0)) {
        throw ValueError("ColumnProblem: min_gap entries must be nonnegative");
      }
      if (gaps->min_gap[i] > gaps->max_gap[i]) {
        throw InfeasibleError("ColumnProblem: infeasible gap spec, min_gap exceeds max_gap");
      }
    }
  }
}

void SolverParams::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValueError("SolverParams: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValueError("SolverParams: beta2 must be in (0,1)");
  if (!(beta3 > 1.0)) throw ValueError("SolverParams: beta3 must exceed 1");
  if (!(epsilon > 0.0)) throw ValueError("SolverParams: epsilon must be positive");
  if (max_outer < 1) throw ValueError("SolverParams: max_outer must be positive");
  if (!(lambda0 > 0.0)) throw ValueError("SolverParams: lambda0 must be positive");
  if (!(feasibility_margin >= 0.0)) throw ValueError("SolverParams: feasibility_margin must be nonnegative");
}

Matrix build_adjacency_matrix(int n) {
  if (n < 2) {
    throw DimensionError("build_adjacency_matrix: need at least two surfaces");
  }
  Matrix a = Matrix::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i) = 1.0;
    a(i, i + 1) = -1.0;
  }
  return a;
}

std::pair<Matrix, Vector> build_bounded_constraints(const BoundedGaps& gaps, int n) {
  if (n < 2) {
    throw DimensionError("build_bounded_constraints: need at least two surfaces");
  }
  if (gaps.min_gap.size() != n - 1 || gaps.max_gap.size() != n - 1) {
    throw DimensionError("build_bounded_constraints: gap bounds must have length N-1");
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (gaps.min_gap[i] > gaps.max_gap[i]) {
      throw InfeasibleError("build_bounded_constraints: infeasible spec, min_gap exceeds max_gap");
    }
  }
  const Matrix a = build_adjacency_matrix(n);
  Matrix b_mat(2 * (n - 1), n);
  b_mat.topRows(n - 1) = a;
  b_mat.bottomRows(n - 1) = -a;
  Vector b_vec(2 * (n - 1));
  b_vec.head(n - 1) = -gaps.min_gap;
  b_vec.tail(n - 1) = gaps.max_gap;
  return {std::move(b_mat), std::move(b_vec)};
}

RetainedConstraints retain_finite_rows(const Matrix& b_mat, const Vector& b_vec) {
  RetainedConstraints out;
  for (Eigen::Index i = 0; i < b_vec.size(); ++i) {
    if (std::isfinite(b_vec[i])) out.rows.push_back(static_cast<int>(i));
  }
  const auto m = static_cast<Eigen::Index>(out.rows.size());
  out.B.resize(m, b_mat.cols());
  out.b.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    out.B.row(k) = b_mat.row(out.rows[static_cast<std::size_t>(k)]);
    out.b[k] = b_vec[out.rows[static_cast<std::size_t>(k)]];
  }
  return out;
}

double surface_cost(const Vector& s, const Vector& mu, const Vector& sigma_sq) {
  if (s.size() != mu.size() || s.size() != sigma_sq.size()) {
    throw DimensionError("surface_cost: mismatched lengths");
  }
  double cost = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(sigma_sq[i] > 0.0)) {
      throw ValueError("surface_cost: sigma_sq entries must be positive");
    }
    const double d = s[i] - mu[i];
    cost += d * d / (2.0 * sigma_sq[i]);
  }
  return cost;
}

}  // namespace surfopt
