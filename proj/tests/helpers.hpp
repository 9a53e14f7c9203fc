#pragma once

#include <gtest/gtest.h>

#include <random>

#include "qdf/opalg.hpp"

// Expects `stmt` to throw qdf::Error of the given kind.
#define EXPECT_QDF_ERROR(stmt, k)                                   \
  do {                                                              \
    try {                                                           \
      stmt;                                                         \
      ADD_FAILURE() << "no qdf::Error thrown by " #stmt;            \
    } catch (const qdf::Error& e) {                                 \
      EXPECT_EQ(e.kind(), (k)) << e.what();                         \
    }                                                               \
  } while (0)

namespace testutil {

inline qdf::HermitianOperator random_hermitian(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto n = static_cast<Eigen::Index>(d);
  qdf::CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  qdf::CMatrix h = m + m.adjoint();
  return qdf::HermitianOperator(std::move(h));
}

inline qdf::CMatrix diag(std::initializer_list<double> v) {
  qdf::CMatrix m = qdf::CMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

}  // namespace testutil
