#pragma once

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"

namespace surfopt {

/// Surface-distance metrics between a prediction and ground truth.
struct EvalReport {
  Vector masd_per_surface;  ///< resolution * mean_q |pred - gt| per surface.
  double masd_overall = 0.0;
  int violation_count = 0;  ///< #(i,q) with pred[i][q] > pred[i+1][q] + 1e-6.
};

/// Mean absolute surface distance (scaled by resolution) plus ordering
/// violations of the prediction.
EvalReport masd(const Matrix& pred, const Matrix& gt, double resolution = 1.0);

}  // namespace surfopt
