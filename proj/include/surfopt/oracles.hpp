#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"
#include "surfopt/ipm.hpp"

namespace surfopt {

/// Numeric gradients from central differences of L(theta) = dL_ds . s*(theta).
struct FiniteDiffGradients {
  Vector grad_mu;
  Vector grad_q_diag;
  Vector grad_b;  ///< Full constraint rows for bounded problems; empty otherwise.
  bool ok = true; ///< False when any perturbed solve failed to converge.
};

/// Aggregate of a randomized gradient audit.
struct GradCheckReport {
  double max_rel_error_mu = 0.0;
  double max_rel_error_Q = 0.0;
  double max_rel_error_b = 0.0;
  int n_cases = 0;
  int n_skipped_degenerate = 0;
};

/// Exhaustive reference QP solver: tries every subset of constraints as the
/// active set, solves the equality-constrained KKT system, and keeps the
/// cheapest candidate that is primal feasible (within 1e-9) with nonnegative
/// multipliers (within 1e-9). Throws ConvergenceError when no candidate
/// survives ("oracle-failure").
Vector active_set_oracle(const ColumnProblem& problem);

/// Weighted pool-adjacent-violators isotonic regression: the non-decreasing
/// minimizer of sum w_i (s_i - mu_i)^2.
Vector pav_isotonic(const Vector& mu, const Vector& weights);

/// Central-difference gradients of L(theta) = dL_ds . s*(theta) with respect
/// to mu, the diagonal of Q, and each retained bound entry. s*(theta) is
/// computed by the exhaustive enumeration solver, so the differences probe the
/// exact solution map rather than any iterative solver's terminal iterate; the
/// same row-count limit applies. A perturbed problem with no feasible
/// candidate marks the result not ok.
FiniteDiffGradients finite_diff_gradients(const ColumnProblem& problem, const Vector& dL_ds,
                                          double h = 1e-4);

/// Randomized audit comparing analytic KKT gradients against finite
/// differences on problems filtered for strict complementarity
/// (skip when some constraint has both multiplier and slack below the filter).
GradCheckReport run_gradcheck_suite(int n_cases, std::uint64_t seed,
                                    double degeneracy_filter = 1e-3, double h = 1e-4);

}  // namespace surfopt
