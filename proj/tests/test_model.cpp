#include <gtest/gtest.h>

#include "atlas/model.hpp"

using namespace atlas;

TEST(ReflectionMatrix, SingleGapIsIdentity) {
  const auto rm = build_reflection_matrix(1);
  EXPECT_EQ(rm.r(0, 0), 1.0);
  EXPECT_EQ(rm.w(0, 0), 1.0);
  EXPECT_EQ(rm.u(0, 0), 0.0);
}

TEST(ReflectionMatrix, TwoGapPattern) {
  const auto rm = build_reflection_matrix(2);
  EXPECT_EQ(rm.r(0, 0), 1.0);
  EXPECT_EQ(rm.r(0, 1), -0.5);
  EXPECT_EQ(rm.r(1, 0), -1.0);
  EXPECT_EQ(rm.r(1, 1), 1.0);
}

TEST(ReflectionMatrix, ThreeGapFirstColumnOfInverse) {
  const auto rm = build_reflection_matrix(3);
  EXPECT_NEAR(rm.w(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(rm.w(1, 0), 4.0, 1e-12);
  EXPECT_NEAR(rm.w(2, 0), 2.0, 1e-12);
}

TEST(ReflectionMatrix, FirstColumnOfInverseForManySizes) {
  for (std::size_t n = 1; n <= 40; ++n) {
    const auto rm = build_reflection_matrix(n);
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(rm.w(0, 0), nn, 1e-9 * nn) << "n=" << n;
    for (std::size_t i = 1; i < n; ++i)
      EXPECT_NEAR(rm.w(i, 0), 2.0 * nn - 2.0 * static_cast<double>(i), 1e-9 * nn)
          << "n=" << n << " i=" << i;
  }
}

TEST(ReflectionMatrix, RejectsZero) {
  EXPECT_THROW(build_reflection_matrix(0), InputError);
  EXPECT_THROW(build_drift_matrix(0), InputError);
}

TEST(ReflectionMatrix, InvariantsUpTo64) {
  for (std::size_t n = 1; n <= 64; ++n) {
    const auto rm = build_reflection_matrix(n);
    const auto id = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(rm.r(i, i), 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double expect = i == j                ? 1.0
                              : i == 1 && j == 0    ? -1.0
                              : (i + 1 == j || j + 1 == i) ? -0.5
                                                   : 0.0;
        EXPECT_EQ(rm.r(i, j), expect);
        EXPECT_GE(rm.w(i, j), 0.0);
        EXPECT_EQ(rm.u(i, j), id(i, j) - rm.r(i, j));
      }
    }
    // Entries of W grow like n^2, so the identity check scales with them.
    const double scale = 1e-12 * std::max(1.0, rm.w.norm_inf());
    EXPECT_LE((rm.r * rm.w).max_abs_diff(id), scale) << "n=" << n;
    EXPECT_LE((rm.w * rm.r).max_abs_diff(id), scale) << "n=" << n;
    EXPECT_LT(rm.contraction, 1.0) << "n=" << n;
    if (n >= 2) {
      EXPECT_GT(rm.contraction, 0.0) << "n=" << n;
    }
  }
}

TEST(SpectralRadius, AgreesWithKnownMatrices) {
  Matrix m(2, 2);
  m(0, 1) = 0.5;
  m(1, 0) = 0.5;  // eigenvalues +-0.5, periodic
  EXPECT_NEAR(spectral_radius_nonneg(m), 0.5, 1e-8);
  Matrix d(3, 3);
  d(0, 0) = 0.2;
  d(1, 1) = 0.7;
  d(2, 2) = 0.1;
  EXPECT_NEAR(spectral_radius_nonneg(d), 0.7, 1e-8);
  // Two-gap case: U^T = [[0, 1], [1/2, 0]], radius sqrt(1/2).
  EXPECT_NEAR(build_reflection_matrix(2).contraction, std::sqrt(0.5), 1e-8);
}

TEST(DriftMatrix, Patterns) {
  EXPECT_EQ(build_drift_matrix(1).a(0, 0), 1.0);
  const auto d2 = build_drift_matrix(2);
  EXPECT_EQ(d2.a(0, 0), 1.0);
  EXPECT_EQ(d2.a(0, 1), 0.0);
  EXPECT_EQ(d2.a(1, 0), -1.0);
  EXPECT_EQ(d2.a(1, 1), 1.0);
}

TEST(DriftMatrix, InverseIsExactAllOnesLowerTriangle) {
  for (std::size_t n = 1; n <= 64; ++n) {
    const auto d = build_drift_matrix(n);
    EXPECT_EQ((d.a * d.a_inv).max_abs_diff(Matrix::identity(n)), 0.0) << "n=" << n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(d.a_inv(i, j), j <= i ? 1.0 : 0.0);
  }
}

TEST(LuInverse, SingularIsRejected) {
  Matrix m(2, 2, 1.0);
  EXPECT_THROW(lu_inverse(m), InputError);
}

TEST(ModelParams, Validation) {
  ModelParams p{3, 1.0, 0.0, {0.1, 0.0, 2.0}};
  EXPECT_NO_THROW(p.validate());
  p.g = 0.0;
  EXPECT_THROW(p.validate(), InputError);
  p.g = 1.0;
  p.z0[1] = -1e-3;
  EXPECT_THROW(p.validate(), InputError);
  p.z0 = {1.0};
  EXPECT_THROW(p.validate(), InputError);
  p.n = 0;
  p.z0 = {};
  EXPECT_THROW(p.validate(), InputError);
}
