#pragma once

#include <vector>

#include <Eigen/Dense>

#include "surfopt/column_model.hpp"

namespace surfopt {

/// Lower bound applied to per-surface variances so the precision matrix stays finite.
inline constexpr double kSigmaSqFloor = 0.01;

/// Mixing parameters for combining the region envelope with the expected location.
struct FusionParams {
  double kappa = 2.0;  ///< Balance coefficient, must be >= 2.

  void validate() const;
};

/// Per-image probability maps: one Z x W location distribution per surface plus
/// a Z x W integer region labeling with values in [0, N].
struct ProbabilityField {
  std::vector<Matrix> surface_probs;  ///< N matrices, each Z x W; columns sum to 1.
  Eigen::MatrixXi region_labels;      ///< Z x W, entries in [0, N].

  int num_surfaces() const { return static_cast<int>(surface_probs.size()); }
  int depth() const { return surface_probs.empty() ? 0 : static_cast<int>(surface_probs[0].rows()); }
  int width() const { return surface_probs.empty() ? 0 : static_cast<int>(surface_probs[0].cols()); }

  /// Checks shapes, per-column normalization (1e-6), and label range.
  void validate() const;
};

/// Region statistics for one image column.
struct RegionEnvelope {
  Vector gamma;       ///< Envelope position per surface (length N).
  double confidence;  ///< c in [0,1]; 1 when the labels are monotone non-decreasing.
};

/// (mu, sigma_sq) for one column, plus whether any fused mean needed clamping to [0, Z-1].
struct ColumnParameterization {
  Vector mu;
  Vector sigma_sq;
  bool clamped = false;
};

/// Max-stabilized softmax over one column of logits.
Vector column_softmax(const Vector& logits);

/// Mean location sum_z z*p(z). Throws when p does not sum to 1 within 1e-6.
double expected_location(const Vector& p);

/// Envelope gamma_i = |{z : label(z) <= i}| - 0.5 and confidence c = 1 - D/(Z-1),
/// where D counts adjacent pairs with label(z) > label(z+1). c = 1 when Z = 1.
RegionEnvelope region_envelope(const Eigen::VectorXi& labels, int num_surfaces);

/// Convex fusion (c*gamma + (kappa - c)*xi) / kappa.
double fuse_mu(double gamma, double xi, double c, double kappa);

/// Variance sum_z p(z)*(z - mu)^2, floored at kSigmaSqFloor.
double sigma_sq_from_dist(const Vector& p, double mu);

/// Discrete Gaussian over z in {0..Z-1}, centered at surface_z, normalized to sum 1.
Vector gaussian_gt(double surface_z, double sigma, int depth);

/// Full per-column parameterization: expected location, region envelope,
/// fused mean (clamped into [0, Z-1] when necessary), variance about the
/// fused mean.
ColumnParameterization parameterize_column(const ProbabilityField& field, int column,
                                           const FusionParams& fusion = {});

}  // namespace surfopt
