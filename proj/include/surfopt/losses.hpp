#pragma once

#include <vector>

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"

namespace surfopt {

/// Component values of the composite training loss.
struct LossReport {
  double gdice = 0.0;
  double div = 0.0;
  double smooth = 0.0;
  double l1 = 0.0;
  double weight_w = 10.0;
  double total = 0.0;  ///< gdice + div + smooth + weight_w * l1, exactly.
};

/// Per-pixel weights 1 + alpha*||grad I|| with central differences in the
/// interior and one-sided differences at the borders.
Matrix gradient_weights(const Matrix& image, double alpha = 10.0);

/// Weighted divergence sum W*g*|log(g/p)|; g = 0 terms contribute zero and p
/// is clamped to >= 1e-8 inside the log.
double weighted_divergence(const Matrix& p, const Matrix& g, const Matrix& w);

/// Generalized Dice loss over per-class probability maps with class weights
/// 1/(class volume + 1e-5)^2. gt maps are expected one-hot.
double generalized_dice(const std::vector<Matrix>& pred_regions,
                        const std::vector<Matrix>& gt_regions);

/// Adjacent-column slope MSE summed over surfaces plus interior-region
/// thickness MSE summed over regions (means taken within each surface/region).
double smooth_loss(const Matrix& pred, const Matrix& gt);

/// Mean absolute difference over all N*W surface positions.
double l1_surface_loss(const Matrix& pred, const Matrix& gt);

/// Combine precomputed components into a LossReport with total = gdice + div + smooth + w*l1.
LossReport total_loss(double gdice, double div, double smooth, double l1, double w = 10.0);

}  // namespace surfopt
