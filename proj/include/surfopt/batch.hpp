#pragma once

#include <vector>

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"
#include "surfopt/ipm.hpp"
#include "surfopt/surface_head.hpp"

namespace surfopt {

/// Per-column solver outcome kept alongside the assembled positions.
struct ColumnDiagnostics {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  bool used_pseudo_inverse = false;
  bool projected = false;  ///< Last iterate was swept to feasibility after non-convergence.
};

/// Surface positions for a whole image: N surfaces x W columns.
struct SurfaceField {
  Matrix positions;                        ///< N x W.
  std::vector<ColumnDiagnostics> columns;  ///< Length W.
};

/// Effective worker count: explicit request if positive, else the
/// SURFOPT_WORKERS environment variable, else hardware concurrency.
int resolve_workers(int requested);

/// Solve every column of (mu_field, sigma_sq_field) independently and assemble
/// the results in column order. Columns that fail to converge contribute their
/// last iterate projected to feasibility; if every column fails, throws
/// ConvergenceError.
SurfaceField solve_field(const Matrix& mu_field, const Matrix& sigma_sq_field,
                         const ConstraintSpec& constraints = AdjacencyOnly{},
                         const SolverParams& params = {}, int workers = 0);

/// parameterize_column over all columns followed by solve_field.
SurfaceField infer_from_maps(const ProbabilityField& field, const FusionParams& fusion = {},
                             const ConstraintSpec& constraints = AdjacencyOnly{},
                             const SolverParams& params = {}, int workers = 0);

}  // namespace surfopt
