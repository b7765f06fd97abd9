#include "surfopt/losses.hpp"

#include <cmath>

#include "surfopt/errors.hpp"

namespace surfopt {

namespace {
constexpr double kLogClamp = 1e-8;       // lower bound on p inside log(g/p)
constexpr double kClassWeightEps = 1e-5; // guards 1/volume^2 for empty classes
}  // namespace

Matrix gradient_weights(const Matrix& image, double alpha) {
  const auto z = image.rows();
  const auto w = image.cols();
  if (z < 1 || w < 1) throw DimensionError("gradient_weights: empty image");
  Matrix out(z, w);
  for (Eigen::Index r = 0; r < z; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double dz = 0.0;
      if (z > 1) {
        if (r == 0) {
          dz = image(1, c) - image(0, c);
        } else if (r == z - 1) {
          dz = image(z - 1, c) - image(z - 2, c);
        } else {
          dz = (image(r + 1, c) - image(r - 1, c)) / 2.0;
        }
      }
      double dw = 0.0;
      if (w > 1) {
        if (c == 0) {
          dw = image(r, 1) - image(r, 0);
        } else if (c == w - 1) {
          dw = image(r, w - 1) - image(r, w - 2);
        } else {
          dw = (image(r, c + 1) - image(r, c - 1)) / 2.0;
        }
      }
      out(r, c) = 1.0 + alpha * std::hypot(dz, dw);
    }
  }
  return out;
}

double weighted_divergence(const Matrix& p, const Matrix& g, const Matrix& w) {
  if (p.rows() != g.rows() || p.cols() != g.cols() || p.rows() != w.rows() ||
      p.cols() != w.cols()) {
    throw DimensionError("weighted_divergence: invalid-shape, inputs disagree");
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double gi = g(r, c);
      if (gi == 0.0) continue;
      const double pi = std::max(p(r, c), kLogClamp);
      total += w(r, c) * gi * std::abs(std::log(gi / pi));
    }
  }
  return total;
}

double generalized_dice(const std::vector<Matrix>& pred_regions,
                        const std::vector<Matrix>& gt_regions) {
  if (pred_regions.empty() || pred_regions.size() != gt_regions.size()) {
    throw DimensionError("generalized_dice: invalid-shape, class count mismatch");
  }
  const auto z = pred_regions[0].rows();
  const auto w = pred_regions[0].cols();
  double numer = 0.0;
  double denom = 0.0;
  for (std::size_t l = 0; l < pred_regions.size(); ++l) {
    const Matrix& p = pred_regions[l];
    const Matrix& g = gt_regions[l];
    if (p.rows() != z || p.cols() != w || g.rows() != z || g.cols() != w) {
      throw DimensionError("generalized_dice: invalid-shape, maps disagree");
    }
    const double volume = g.sum();
    const double weight = 1.0 / ((volume + kClassWeightEps) * (volume + kClassWeightEps));
    numer += weight * p.cwiseProduct(g).sum();
    denom += weight * (p.sum() + volume);
  }
  if (denom == 0.0) return 0.0;
  return 1.0 - 2.0 * numer / denom;
}

double smooth_loss(const Matrix& pred, const Matrix& gt) {
  const auto n = pred.rows();
  const auto w = pred.cols();
  if (gt.rows() != n || gt.cols() != w) {
    throw DimensionError("smooth_loss: invalid-shape, fields disagree");
  }
  if (w < 2) throw DimensionError("smooth_loss: invalid-shape, need at least two columns");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index q = 0; q + 1 < w; ++q) {
      const double dp = pred(i, q + 1) - pred(i, q);
      const double dg = gt(i, q + 1) - gt(i, q);
      acc += (dp - dg) * (dp - dg);
    }
    total += acc / static_cast<double>(w - 1);
  }
  for (Eigen::Index r = 1; r < n; ++r) {
    double acc = 0.0;
    for (Eigen::Index q = 0; q < w; ++q) {
      const double tp = pred(r, q) - pred(r - 1, q);
      const double tg = gt(r, q) - gt(r - 1, q);
      acc += (tp - tg) * (tp - tg);
    }
    total += acc / static_cast<double>(w);
  }
  return total;
}

double l1_surface_loss(const Matrix& pred, const Matrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw DimensionError("l1_surface_loss: invalid-shape, fields disagree");
  }
  if (pred.size() == 0) throw DimensionError("l1_surface_loss: empty fields");
  return (pred - gt).cwiseAbs().sum() / static_cast<double>(pred.size());
}

LossReport total_loss(double gdice, double div, double smooth, double l1, double w) {
  LossReport report;
  report.gdice = gdice;
  report.div = div;
  report.smooth = smooth;
  report.l1 = l1;
  report.weight_w = w;
  report.total = gdice + div + smooth + w * l1;
  return report;
}

}  // namespace surfopt
