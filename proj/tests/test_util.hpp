#pragma once

#include <cmath>
#include <initializer_list>

#include <doctest.h>

#include "surfopt/column_model.hpp"

namespace surfopt::testing {

inline void check_vec(const Vector& actual, std::initializer_list<double> expected, double tol) {
  REQUIRE(actual.size() == static_cast<Eigen::Index>(expected.size()));
  Eigen::Index i = 0;
  for (double v : expected) {
    INFO("index ", i);
    CHECK(std::abs(actual[i] - v) <= tol);
    ++i;
  }
}

inline void check_mat(const Matrix& actual,
                      std::initializer_list<std::initializer_list<double>> expected, double tol) {
  REQUIRE(actual.rows() == static_cast<Eigen::Index>(expected.size()));
  Eigen::Index r = 0;
  for (const auto& row : expected) {
    REQUIRE(actual.cols() == static_cast<Eigen::Index>(row.size()));
    Eigen::Index c = 0;
    for (double v : row) {
      INFO("entry (", r, ",", c, ")");
      CHECK(std::abs(actual(r, c) - v) <= tol);
      ++c;
    }
    ++r;
  }
}

inline Vector make_vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace surfopt::testing
