#include <doctest.h>

#include <cmath>
#include <vector>

#include "surfopt/errors.hpp"
#include "surfopt/losses.hpp"
#include "test_util.hpp"

using namespace surfopt;

namespace {

Matrix mat2(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("gradient weights are one on flat images and follow the slope") {
  const Matrix flat = Matrix::Constant(2, 3, 7.0);
  const Matrix wf = gradient_weights(flat);
  CHECK(wf.minCoeff() == 1.0);
  CHECK(wf.maxCoeff() == 1.0);

  const Matrix ramp = mat2({{0}, {0.5}, {1}});
  const Matrix wr = gradient_weights(ramp, 10.0);
  for (Eigen::Index r = 0; r < 3; ++r) {
    CHECK(wr(r, 0) == doctest::Approx(6.0).epsilon(1e-12));
  }
  const Matrix w0 = gradient_weights(ramp, 0.0);
  CHECK(w0.minCoeff() == 1.0);
  CHECK(w0.maxCoeff() == 1.0);
}

TEST_CASE("divergence vanishes at equality and matches hand values") {
  const Matrix p = mat2({{0.25, 0.5}, {0.75, 0.5}});
  const Matrix ones = Matrix::Ones(2, 2);
  CHECK(weighted_divergence(p, p, ones) == 0.0);

  CHECK(weighted_divergence(mat2({{0.5}}), mat2({{1.0}}), mat2({{1.0}})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(weighted_divergence(mat2({{0.5}}), mat2({{1.0}}), mat2({{2.0}})) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // Zero target cells contribute nothing even where the prediction is zero.
  CHECK(weighted_divergence(mat2({{0.0}}), mat2({{0.0}}), mat2({{5.0}})) == 0.0);
  // Zero predictions are clamped inside the log rather than producing inf.
  const double clamped = weighted_divergence(mat2({{0.0}}), mat2({{1.0}}), mat2({{1.0}}));
  CHECK(std::isfinite(clamped));
  CHECK(clamped == doctest::Approx(-std::log(1e-8)).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_divergence(Matrix::Ones(2, 2), Matrix::Ones(2, 3), ones),
                  DimensionError);
}

TEST_CASE("divergence scales linearly with the weight map") {
  const Matrix p = mat2({{0.3, 0.6}, {0.7, 0.4}});
  const Matrix g = mat2({{0.5, 0.5}, {0.5, 0.5}});
  const Matrix w = mat2({{1, 2}, {3, 4}});
  const double once = weighted_divergence(p, g, w);
  const double twice = weighted_divergence(p, g, 2.0 * w);
  CHECK(twice == doctest::Approx(2.0 * once).epsilon(1e-12));
}

TEST_CASE("generalized dice hits its anchor values") {
  const Matrix a = mat2({{1, 0}});
  const Matrix b = mat2({{0, 1}});
  CHECK(generalized_dice({a, b}, {a, b}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(generalized_dice({b, a}, {a, b}) == doctest::Approx(1.0).epsilon(1e-9));

  const Matrix half = mat2({{0.5, 0.5}});
  CHECK(generalized_dice({half, half}, {a, b}) == doctest::Approx(0.5).epsilon(1e-9));

  // All-empty ground truth gives a zero denominator and a defined zero loss.
  const Matrix zero = Matrix::Zero(1, 2);
  CHECK(generalized_dice({zero}, {zero}) == 0.0);

  CHECK_THROWS_AS(generalized_dice({a}, {a, b}), DimensionError);
  CHECK_THROWS_AS(generalized_dice({a}, {Matrix::Ones(2, 2)}), DimensionError);
}

TEST_CASE("smoothness penalty matches hand values") {
  const Matrix gt = mat2({{0, 1, 2}, {5, 5, 5}});
  CHECK(smooth_loss(gt, gt) == 0.0);

  CHECK(smooth_loss(mat2({{0, 1, 2}}), mat2({{0, 0, 0}})) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(smooth_loss(mat2({{0, 0}, {3, 3}}), mat2({{0, 0}, {1, 1}})) ==
        doctest::Approx(4.0).epsilon(1e-12));

  CHECK_THROWS_AS(smooth_loss(mat2({{0, 1}}), mat2({{0, 1, 2}})), DimensionError);
  CHECK_THROWS_AS(smooth_loss(mat2({{0}}), mat2({{0}})), DimensionError);
}

TEST_CASE("smoothness is invariant to translating both fields") {
  const Matrix pred = mat2({{0, 1, 3}, {4, 4, 6}});
  const Matrix gt = mat2({{0, 2, 2}, {5, 4, 7}});
  const double base = smooth_loss(pred, gt);
  const Matrix shift = Matrix::Constant(2, 3, 11.0);
  CHECK(smooth_loss(pred + shift, gt + shift) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("l1 surface loss is the mean absolute deviation") {
  const Matrix gt = mat2({{0, 0}, {1, 1}});
  CHECK(l1_surface_loss(gt, gt) == 0.0);
  CHECK(l1_surface_loss(mat2({{0, 0}, {1, 1}}), mat2({{2, 2}, {3, 3}})) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(l1_surface_loss(mat2({{1}, {2}}), mat2({{0}, {0}})) ==
        doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(l1_surface_loss(mat2({{0}}), mat2({{0, 1}})), DimensionError);
}

TEST_CASE("total loss combines the components exactly") {
  const LossReport zero = total_loss(0, 0, 0, 0);
  CHECK(zero.total == 0.0);
  CHECK(zero.weight_w == 10.0);

  const LossReport r = total_loss(0.5, 0.2, 0.1, 0.03, 10.0);
  CHECK(r.total == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(r.total == r.gdice + r.div + r.smooth + r.weight_w * r.l1);

  const LossReport unweighted = total_loss(0.5, 0.2, 0.1, 0.03, 0.0);
  CHECK(unweighted.total == doctest::Approx(0.8).epsilon(1e-12));
}

}  // TEST_SUITE
