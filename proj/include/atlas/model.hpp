#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "atlas/errors.hpp"
#include "atlas/matrix.hpp"

namespace atlas {

/// Inert particle with n Brownian particles stacked above it.
struct ModelParams {
  std::size_t n = 1;       // number of Brownian particles
  double g = 1.0;          // gravitation constant
  double v0 = 0.0;         // initial velocity of the inert particle
  std::vector<double> z0;  // initial gaps, size n

  void validate() const {
    if (n < 1) throw InputError("ModelParams: n must be >= 1");
    if (!(g > 0.0)) throw InputError("ModelParams: g must be > 0");
    if (z0.size() != n)
      throw InputError("ModelParams: z0 must have n = " + std::to_string(n) +
                       " entries");
    for (std::size_t i = 0; i < n; ++i)
      if (!(z0[i] >= 0.0))
        throw InputError("ModelParams: z0[" + std::to_string(i) +
                         "] must be >= 0");
  }
};

/// Reflection matrix R with U = I - R and W = R^{-1}.
///
/// R has unit diagonal, -1/2 on the off-diagonals, except R(2,1) = -1: the
/// collision between the inert particle and particle 1 pushes gap 2 with
/// full weight because the inert particle does not move under local time.
struct ReflectionMatrix {
  Matrix r;
  Matrix w;
  Matrix u;
  double contraction = 0.0;  // spectral radius of U^T

  std::size_t size() const noexcept { return r.rows(); }
};

/// A: +1 on the diagonal, -1 on the subdiagonal, maps B to the gap noise.
struct DriftMatrix {
  Matrix a;
  Matrix a_inv;

  std::size_t size() const noexcept { return a.rows(); }
};

inline Matrix reflection_pattern(std::size_t n) {
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    if (i + 1 < n) r(i, i + 1) = -0.5;
    if (i > 0) r(i, i - 1) = i == 1 ? -1.0 : -0.5;
  }
  return r;
}

inline ReflectionMatrix build_reflection_matrix(std::size_t n) {
  if (n == 0) throw InputError("build_reflection_matrix: n must be >= 1");
  ReflectionMatrix m;
  m.r = reflection_pattern(n);
  m.u = Matrix::identity(n) - m.r;
  m.w = lu_inverse(m.r);
  // Entries that are zero in exact arithmetic may come back as -1e-17.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m.w(i, j) < 0.0 && m.w(i, j) > -1e-12) m.w(i, j) = 0.0;
  m.contraction = spectral_radius_nonneg(m.u.transposed());
  return m;
}

inline DriftMatrix build_drift_matrix(std::size_t n) {
  if (n == 0) throw InputError("build_drift_matrix: n must be >= 1");
  DriftMatrix m;
  m.a = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.a(i, i) = 1.0;
    if (i > 0) m.a(i, i - 1) = -1.0;
  }
  // Forward substitution against the identity; A is unit lower bidiagonal
  // so every step is exact in floating point.
  m.a_inv = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = i == c ? 1.0 : 0.0;
      if (i > 0) s -= m.a(i, i - 1) * m.a_inv(i - 1, c);
      m.a_inv(i, c) = s;
    }
  }
  return m;
}

}  // namespace atlas
