#include "surfopt/eval.hpp"

#include <cmath>

#include "surfopt/errors.hpp"

namespace surfopt {

EvalReport masd(const Matrix& pred, const Matrix& gt, double resolution) {
  const auto n = pred.rows();
  const auto w = pred.cols();
  if (n < 1 || w < 1) throw DimensionError("masd: invalid-shape, empty field");
  if (gt.rows() != n || gt.cols() != w) {
    throw DimensionError("masd: invalid-shape, fields disagree");
  }
  if (!(resolution > 0.0)) throw ValueError("masd: resolution must be positive");

  EvalReport out;
  out.masd_per_surface.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.masd_per_surface[i] =
        resolution * (pred.row(i) - gt.row(i)).cwiseAbs().sum() / static_cast<double>(w);
  }
  out.masd_overall = out.masd_per_surface.sum() / static_cast<double>(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index q = 0; q < w; ++q) {
      if (pred(i, q) > pred(i + 1, q) + 1e-6) ++out.violation_count;
    }
  }
  return out;
}

}  // namespace surfopt
