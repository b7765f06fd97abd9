#include <doctest.h>

#include <cstdlib>
#include <string>

#include "surfopt/batch.hpp"
#include "surfopt/errors.hpp"
#include "test_util.hpp"

using namespace surfopt;

namespace {

SolverParams tight() {
  SolverParams p;
  p.epsilon = 1e-8;
  p.max_outer = 200;
  return p;
}

/// Two ordered surfaces at half-integer depths z0+0.5 and z1+0.5, expressed as
/// adjacent-voxel half/half masses plus the matching region labeling.
ProbabilityField two_surface_field(int depth, int width, int z0, int z1) {
  ProbabilityField field;
  Matrix p0 = Matrix::Zero(depth, width);
  Matrix p1 = Matrix::Zero(depth, width);
  Eigen::MatrixXi labels(depth, width);
  for (int q = 0; q < width; ++q) {
    p0(z0, q) = 0.5;
    p0(z0 + 1, q) = 0.5;
    p1(z1, q) = 0.5;
    p1(z1 + 1, q) = 0.5;
    for (int z = 0; z < depth; ++z) {
      labels(z, q) = (z0 + 0.5 <= z ? 1 : 0) + (z1 + 0.5 <= z ? 1 : 0);
    }
  }
  field.surface_probs = {p0, p1};
  field.region_labels = labels;
  return field;
}

}  // namespace

TEST_SUITE("batch-engine") {

TEST_CASE("ordered mean fields pass through unchanged") {
  Matrix mu(3, 4);
  mu << 1, 2, 0, 5,
        4, 6, 3, 8,
        9, 7, 6, 11;
  const Matrix sig = Matrix::Ones(3, 4);
  const SurfaceField out = solve_field(mu, sig, AdjacencyOnly{}, tight());
  REQUIRE(out.positions.rows() == 3);
  REQUIRE(out.positions.cols() == 4);
  for (Eigen::Index q = 0; q < 4; ++q) {
    CHECK(out.columns[static_cast<std::size_t>(q)].converged);
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(out.positions(i, q) == doctest::Approx(mu(i, q)).epsilon(1e-6));
    }
  }
}

TEST_CASE("columns are solved independently") {
  Matrix mu(2, 2);
  mu << 5, 1,
        3, 2;
  const Matrix sig = Matrix::Ones(2, 2);
  const SurfaceField out = solve_field(mu, sig, AdjacencyOnly{}, tight());
  CHECK(out.positions(0, 0) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(out.positions(1, 0) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(out.positions(0, 1) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(out.positions(1, 1) == doctest::Approx(2.0).epsilon(1e-3));

  // Swapping columns swaps the results.
  Matrix mu_swapped(2, 2);
  mu_swapped << 1, 5,
                2, 3;
  const SurfaceField swapped = solve_field(mu_swapped, sig, AdjacencyOnly{}, tight());
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(swapped.positions(i, 0) == out.positions(i, 1));
    CHECK(swapped.positions(i, 1) == out.positions(i, 0));
  }
}

TEST_CASE("shape mismatches are rejected") {
  const Matrix mu = Matrix::Ones(2, 3);
  CHECK_THROWS_AS(solve_field(mu, Matrix::Ones(2, 2)), DimensionError);
  CHECK_THROWS_AS(solve_field(mu, Matrix::Ones(3, 3)), DimensionError);
  CHECK_THROWS_AS(solve_field(Matrix(0, 0), Matrix(0, 0)), DimensionError);
  BoundedGaps gaps;
  gaps.min_gap = Vector::Zero(2);  // needs length N-1 = 1
  gaps.max_gap = Vector::Zero(2);
  CHECK_THROWS_AS(solve_field(mu, Matrix::Ones(2, 3), gaps), DimensionError);
}

TEST_CASE("worker count does not change the result bits") {
  Matrix mu(4, 7);
  mu << 3, 1, 4, 1, 5, 9, 2,
        6, 5, 3, 5, 8, 9, 7,
        9, 3, 2, 3, 8, 4, 6,
        2, 6, 4, 3, 3, 8, 3;
  Matrix sig(4, 7);
  sig.setConstant(1.0);
  sig.row(2).setConstant(0.5);
  const SurfaceField one = solve_field(mu, sig, AdjacencyOnly{}, tight(), 1);
  const SurfaceField four = solve_field(mu, sig, AdjacencyOnly{}, tight(), 4);
  REQUIRE(one.positions.rows() == four.positions.rows());
  REQUIRE(one.positions.cols() == four.positions.cols());
  for (Eigen::Index q = 0; q < 7; ++q) {
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(one.positions(i, q) == four.positions(i, q));
    }
    CHECK(one.columns[static_cast<std::size_t>(q)].iterations ==
          four.columns[static_cast<std::size_t>(q)].iterations);
    CHECK(one.columns[static_cast<std::size_t>(q)].residual_norm ==
          four.columns[static_cast<std::size_t>(q)].residual_norm);
  }
}

TEST_CASE("unconverged columns are projected to a feasible ordering") {
  // With a single Newton iteration the pooled column lands exactly on its
  // optimum while the inactive column still carries complementarity error.
  Matrix mu(2, 2);
  mu << 5, 1,
        3, 5;
  const Matrix sig = Matrix::Ones(2, 2);
  SolverParams starved;
  starved.max_outer = 1;
  const SurfaceField out = solve_field(mu, sig, AdjacencyOnly{}, starved);

  CHECK(out.columns[0].converged);
  CHECK_FALSE(out.columns[0].projected);
  CHECK(out.positions(0, 0) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(out.positions(1, 0) == doctest::Approx(4.0).epsilon(1e-3));

  CHECK_FALSE(out.columns[1].converged);
  CHECK(out.columns[1].projected);
  CHECK(out.positions(0, 1) <= out.positions(1, 1));
  CHECK(out.positions.col(1).allFinite());
}

TEST_CASE("a batch with no converged column fails loudly") {
  Matrix mu(2, 3);
  mu << 5, 9, 4,
        3, 2, 1;
  SolverParams impossible;
  impossible.epsilon = 1e-300;
  impossible.max_outer = 3;
  CHECK_THROWS_AS(solve_field(mu, Matrix::Ones(2, 3), AdjacencyOnly{}, impossible),
                  ConvergenceError);
}

TEST_CASE("map inference recovers half-integer surfaces exactly") {
  const ProbabilityField field = two_surface_field(6, 3, 1, 3);
  const SurfaceField out = infer_from_maps(field, {}, AdjacencyOnly{}, tight());
  REQUIRE(out.positions.rows() == 2);
  for (Eigen::Index q = 0; q < 3; ++q) {
    CHECK(out.positions(0, q) == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(out.positions(1, q) == doctest::Approx(3.5).epsilon(1e-3));
  }
}

TEST_CASE("crossing expectations still produce ordered surfaces") {
  // Surface 0's mass sits below surface 1's, and a disordered labeling lowers
  // the confidence, so the fused means cross; the solver must restore order.
  ProbabilityField field;
  Matrix p0 = Matrix::Zero(5, 1);
  p0(3, 0) = 0.5;
  p0(4, 0) = 0.5;  // xi_0 = 3.5
  Matrix p1 = Matrix::Zero(5, 1);
  p1(1, 0) = 0.5;
  p1(2, 0) = 0.5;  // xi_1 = 1.5
  field.surface_probs = {p0, p1};
  field.region_labels.resize(5, 1);
  field.region_labels << 0, 1, 0, 1, 2;
  const SurfaceField out = infer_from_maps(field, {}, AdjacencyOnly{}, tight());
  CHECK(out.positions(0, 0) <= out.positions(1, 0) + 1e-9);
  CHECK(out.positions(0, 0) == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(out.positions(1, 0) == doctest::Approx(2.5).epsilon(1e-3));
}

TEST_CASE("worker resolution prefers explicit, then environment, then hardware") {
  const char* saved = std::getenv("SURFOPT_WORKERS");
  const std::string saved_value = saved ? saved : "";

  setenv("SURFOPT_WORKERS", "3", 1);
  CHECK(resolve_workers(5) == 5);
  CHECK(resolve_workers(0) == 3);
  setenv("SURFOPT_WORKERS", "not-a-number", 1);
  CHECK(resolve_workers(0) >= 1);
  unsetenv("SURFOPT_WORKERS");
  CHECK(resolve_workers(0) >= 1);
  CHECK(resolve_workers(-2) >= 1);

  if (saved) setenv("SURFOPT_WORKERS", saved_value.c_str(), 1);
}

}  // TEST_SUITE
