#include "surfopt/batch.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "surfopt/errors.hpp"

namespace surfopt {

namespace {

// Monotone repair for unconverged columns: cumulative max with the minimum
// gaps, so the assembled field always satisfies the ordering invariant.
Vector sweep_feasible(Vector s, const ConstraintSpec& constraints) {
  const auto n = s.size();
  const auto* gaps = std::get_if<BoundedGaps>(&constraints);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double gap = gaps ? gaps->min_gap[i] : 0.0;
    s[i + 1] = std::max(s[i + 1], s[i] + gap);
  }
  return s;
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SURFOPT_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

SurfaceField solve_field(const Matrix& mu_field, const Matrix& sigma_sq_field,
                         const ConstraintSpec& constraints, const SolverParams& params,
                         int workers) {
  const auto n = mu_field.rows();
  const auto w = mu_field.cols();
  if (n < 1 || w < 1) throw DimensionError("solve_field: invalid-shape, empty field");
  if (sigma_sq_field.rows() != n || sigma_sq_field.cols() != w) {
    throw DimensionError("solve_field: invalid-shape, sigma_sq_field does not match mu_field");
  }
  if (const auto* gaps = std::get_if<BoundedGaps>(&constraints)) {
    if (gaps->min_gap.size() != n - 1 || gaps->max_gap.size() != n - 1) {
      throw DimensionError("solve_field: invalid-shape, gap bounds must have length N-1");
    }
  }
  params.validate();

  SurfaceField out;
  out.positions.resize(n, w);
  out.columns.resize(static_cast<std::size_t>(w));

  const int nw = std::min<int>(resolve_workers(workers), static_cast<int>(w));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));

  auto run_block = [&](int worker, Eigen::Index begin, Eigen::Index end) {
    try {
      for (Eigen::Index q = begin; q < end; ++q) {
        ColumnProblem problem;
        problem.mu = mu_field.col(q);
        problem.sigma_sq = sigma_sq_field.col(q);
        problem.constraints = constraints;
        const Solution sol = solve_column(problem, params);
        ColumnDiagnostics& diag = out.columns[static_cast<std::size_t>(q)];
        diag.iterations = sol.iterations;
        diag.residual_norm = sol.residual_norm;
        diag.converged = sol.converged;
        diag.used_pseudo_inverse = sol.used_pseudo_inverse;
        if (sol.converged) {
          out.positions.col(q) = sol.s_star;
        } else {
          out.positions.col(q) = sweep_feasible(sol.s_star, constraints);
          diag.projected = true;
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(worker)] = std::current_exception();
    }
  };

  if (nw <= 1) {
    run_block(0, 0, w);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int k = 0; k < nw; ++k) {
      const Eigen::Index begin = w * k / nw;
      const Eigen::Index end = w * (k + 1) / nw;
      pool.emplace_back(run_block, k, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const bool any_converged =
      std::any_of(out.columns.begin(), out.columns.end(),
                  [](const ColumnDiagnostics& d) { return d.converged; });
  if (!any_converged) {
    throw ConvergenceError("solve_field: batch-failure, every column failed to converge");
  }
  return out;
}

SurfaceField infer_from_maps(const ProbabilityField& field, const FusionParams& fusion,
                             const ConstraintSpec& constraints, const SolverParams& params,
                             int workers) {
  field.validate();
  fusion.validate();
  const int n = field.num_surfaces();
  const int w = field.width();
  Matrix mu_field(n, w);
  Matrix sigma_sq_field(n, w);
  for (int q = 0; q < w; ++q) {
    const ColumnParameterization cp = parameterize_column(field, q, fusion);
    mu_field.col(q) = cp.mu;
    sigma_sq_field.col(q) = cp.sigma_sq;
  }
  return solve_field(mu_field, sigma_sq_field, constraints, params, workers);
}

}  // namespace surfopt
