#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "atlas/errors.hpp"

namespace atlas {

/// Small dense row-major matrix. The models here have n up to a few hundred,
/// so nothing fancier is warranted.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    assert(a.cols_ == b.rows_);
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    assert(a.rows_ == b.rows_ && a.cols_ == b.cols_);
    Matrix c = a;
    for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] -= b.data_[k];
    return c;
  }

  /// y = M x
  void apply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == cols_ && y.size() == rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      const double* r = data_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(rows_);
    apply(x, y);
    return y;
  }

  double max_abs_diff(const Matrix& other) const {
    assert(rows_ == other.rows_ && cols_ == other.cols_);
    double m = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k)
      m = std::max(m, std::abs(data_[k] - other.data_[k]));
    return m;
  }

  /// Induced infinity norm (max absolute row sum).
  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (double v : row(i)) s += std::abs(v);
      m = std::max(m, s);
    }
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Inverse by LU decomposition with partial pivoting.
inline Matrix lu_inverse(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n != m.cols()) throw InputError("lu_inverse: matrix is not square");
  Matrix lu = m;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) throw InputError("lu_inverse: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(perm[k], perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const double f = lu(i, k);
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }

  Matrix inv(n, n);
  std::vector<double> col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
      col[i] /= lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
  }
  return inv;
}

/// Spectral radius of a nonnegative matrix by power iteration. Iterates on
/// I + M, which is primitive even when M is periodic (the tridiagonal
/// matrices here have zero diagonal), and subtracts the shift at the end.
inline double spectral_radius_nonneg(const Matrix& m, double tol = 1e-10,
                                     int max_iter = 1000000) {
  const std::size_t n = m.rows();
  Matrix shifted = m;
  for (std::size_t i = 0; i < n; ++i) shifted(i, i) += 1.0;
  std::vector<double> x(n, 1.0), y(n);
  double lambda = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    shifted.apply(x, y);
    double norm = 0.0;
    for (double v : y) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) y[i] /= norm;
    // Collatz-Wielandt bounds bracket the Perron root.
    shifted.apply(y, x);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Components outside the dominant class decay geometrically; once
      // they are negligible their ratios carry no information.
      if (y[i] <= 1e-200) continue;
      lo = std::min(lo, x[i] / y[i]);
      hi = std::max(hi, x[i] / y[i]);
    }
    x = y;
    lambda = 0.5 * (lo + hi);
    if (hi - lo < tol) return lambda - 1.0;
  }
  return lambda - 1.0;
}

}  // namespace atlas
