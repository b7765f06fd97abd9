#include "surfopt/surface_head.hpp"

#include <cmath>

#include "surfopt/errors.hpp"

namespace surfopt {

void FusionParams::validate() const {
  if (!(kappa >= 2.0)) throw ValueError("FusionParams: kappa must be at least 2");
}

void ProbabilityField::validate() const {
  const int n = num_surfaces();
  if (n < 1) throw DimensionError("ProbabilityField: need at least one surface map");
  const auto z = surface_probs[0].rows();
  const auto w = surface_probs[0].cols();
  if (z < 1 || w < 1) throw DimensionError("ProbabilityField: empty surface map");
  for (const Matrix& p : surface_probs) {
    if (p.rows() != z || p.cols() != w) {
      throw DimensionError("ProbabilityField: surface maps disagree in shape");
    }
    for (Eigen::Index q = 0; q < w; ++q) {
      if (std::abs(p.col(q).sum() - 1.0) > 1e-6) {
        throw ValueError("ProbabilityField: invalid-distribution, column does not sum to 1");
      }
      if ((p.col(q).array() < 0.0).any()) {
        throw ValueError("ProbabilityField: invalid-distribution, negative probability");
      }
    }
  }
  if (region_labels.rows() != z || region_labels.cols() != w) {
    throw DimensionError("ProbabilityField: region_labels shape does not match surface maps");
  }
  if ((region_labels.array() < 0).any() || (region_labels.array() > n).any()) {
    throw ValueError("ProbabilityField: invalid-label, region label outside [0, N]");
  }
}

Vector column_softmax(const Vector& logits) {
  if (logits.size() < 1) throw DimensionError("column_softmax: empty logits");
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw ValueError("column_softmax: logits must be finite");
  }
  const Vector shifted = logits.array() - logits.maxCoeff();
  const Vector e = shifted.array().exp();
  return e / e.sum();
}

double expected_location(const Vector& p) {
  if (p.size() < 1) throw DimensionError("expected_location: empty distribution");
  if (std::abs(p.sum() - 1.0) > 1e-6) {
    throw ValueError("expected_location: invalid-distribution, probabilities do not sum to 1");
  }
  double xi = 0.0;
  for (Eigen::Index z = 0; z < p.size(); ++z) xi += static_cast<double>(z) * p[z];
  return xi;
}

RegionEnvelope region_envelope(const Eigen::VectorXi& labels, int num_surfaces) {
  const auto z = labels.size();
  if (z < 1) throw DimensionError("region_envelope: empty label column");
  if (num_surfaces < 1) throw DimensionError("region_envelope: need at least one surface");
  if ((labels.array() < 0).any() || (labels.array() > num_surfaces).any()) {
    throw ValueError("region_envelope: invalid-label, region label outside [0, N]");
  }
  RegionEnvelope out;
  out.gamma.resize(num_surfaces);
  for (int i = 0; i < num_surfaces; ++i) {
    const auto count = (labels.array() <= i).count();
    out.gamma[i] = static_cast<double>(count) - 0.5;
  }
  int disordered = 0;
  for (Eigen::Index k = 0; k + 1 < z; ++k) {
    if (labels[k] > labels[k + 1]) ++disordered;
  }
  out.confidence = (z == 1)
                       ? 1.0
                       : 1.0 - static_cast<double>(disordered) / static_cast<double>(z - 1);
  out.confidence = std::min(1.0, std::max(0.0, out.confidence));
  return out;
}

double fuse_mu(double gamma, double xi, double c, double kappa) {
  if (!(c >= 0.0 && c <= 1.0)) throw ValueError("fuse_mu: confidence must lie in [0,1]");
  if (!(kappa >= 2.0)) throw ValueError("fuse_mu: kappa must be at least 2");
  return (c * gamma + (kappa - c) * xi) / kappa;
}

double sigma_sq_from_dist(const Vector& p, double mu) {
  if (p.size() < 1) throw DimensionError("sigma_sq_from_dist: empty distribution");
  if (std::abs(p.sum() - 1.0) > 1e-6) {
    throw ValueError("sigma_sq_from_dist: invalid-distribution, probabilities do not sum to 1");
  }
  double var = 0.0;
  for (Eigen::Index z = 0; z < p.size(); ++z) {
    const double d = static_cast<double>(z) - mu;
    var += p[z] * d * d;
  }
  return std::max(var, kSigmaSqFloor);
}

Vector gaussian_gt(double surface_z, double sigma, int depth) {
  if (depth < 1) throw DimensionError("gaussian_gt: depth must be at least 1");
  if (!(sigma > 0.0)) throw ValueError("gaussian_gt: sigma must be positive");
  Vector g(depth);
  for (int z = 0; z < depth; ++z) {
    const double d = (static_cast<double>(z) - surface_z) / sigma;
    g[z] = std::exp(-0.5 * d * d);
  }
  const double total = g.sum();
  if (!(total > 0.0)) {
    // Center so far outside the voxel range that every weight underflowed:
    // fall back to a point mass at the nearest voxel.
    g.setZero();
    const int nearest =
        std::min(depth - 1, std::max(0, static_cast<int>(std::lround(surface_z))));
    g[nearest] = 1.0;
    return g;
  }
  return g / total;
}

ColumnParameterization parameterize_column(const ProbabilityField& field, int column,
                                           const FusionParams& fusion) {
  fusion.validate();
  const int n = field.num_surfaces();
  if (n < 1) throw DimensionError("parameterize_column: field has no surfaces");
  if (column < 0 || column >= field.width()) {
    throw DimensionError("parameterize_column: column index out of range");
  }
  const int z = field.depth();
  const RegionEnvelope env = region_envelope(field.region_labels.col(column), n);
  ColumnParameterization out;
  out.mu.resize(n);
  out.sigma_sq.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vector p = field.surface_probs[static_cast<std::size_t>(i)].col(column);
    const double xi = expected_location(p);
    double mu = fuse_mu(env.gamma[i], xi, env.confidence, fusion.kappa);
    const double hi = static_cast<double>(z - 1);
    if (mu < 0.0 || mu > hi) {
      mu = std::min(hi, std::max(0.0, mu));
      out.clamped = true;
    }
    out.mu[i] = mu;
    out.sigma_sq[i] = sigma_sq_from_dist(p, mu);
  }
  return out;
}

}  // namespace surfopt
