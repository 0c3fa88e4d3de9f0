#pragma once

// Reference solutions for checking the Skorokhod solver. They share no code
// with the fixed-point schemes in skorokhod.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "atlas/matrix.hpp"
#include "atlas/model.hpp"
#include "atlas/path.hpp"
#include "atlas/rng.hpp"

namespace atlas::oracle {

/// One-dimensional reflection at zero: y(t) = x(t) + max_{s<=t} (-x(s))^+.
inline DiscretePath reflect_1d(const DiscretePath& x) {
  DiscretePath y(x.times, 1);
  double m = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    m = std::max(m, -x(k, 0));
    y(k, 0) = x(k, 0) + m;
  }
  return y;
}

/// Regulator by active-set enumeration at every grid point. At t_k the
/// increment d = eta(t_k) - eta(t_{k-1}) solves the linear complementarity
/// problem d >= 0, y = x(t_k) + R (eta(t_{k-1}) + d) >= 0, d_i y_i = 0.
/// R is a P-matrix, so exactly one of the 2^n active sets is consistent.
inline DiscretePath regulator_by_enumeration(const DiscretePath& x, const Matrix& r,
                                             double feas_tol = 1e-12) {
  const std::size_t n = x.dim();
  DiscretePath eta(x.times, n);
  std::vector<double> prev(n, 0.0), base(n), best(n), trial(n);

  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      base[i] = x(k, i);
      for (std::size_t j = 0; j < n; ++j) base[i] += r(i, j) * prev[j];
    }
    double best_violation = INFINITY;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<std::size_t> act;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) act.push_back(i);
      std::vector<double> d(n, 0.0);
      if (!act.empty()) {
        Matrix sub(act.size(), act.size());
        for (std::size_t a = 0; a < act.size(); ++a)
          for (std::size_t b = 0; b < act.size(); ++b) sub(a, b) = r(act[a], act[b]);
        const Matrix inv = lu_inverse(sub);
        for (std::size_t a = 0; a < act.size(); ++a) {
          double s = 0.0;
          for (std::size_t b = 0; b < act.size(); ++b) s -= inv(a, b) * base[act[b]];
          d[act[a]] = s;
        }
      }
      double violation = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double y = base[i];
        for (std::size_t j = 0; j < n; ++j) y += r(i, j) * d[j];
        violation = std::max({violation, -d[i], -y});
      }
      if (violation < best_violation) {
        best_violation = violation;
        best = d;
      }
      if (violation <= feas_tol) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      prev[i] += std::max(best[i], 0.0);
      eta(k, i) = prev[i];
    }
  }
  return eta;
}

/// Random walk path with x(0) >= 0 and a downward drift, so reflection is
/// active on every face.
inline DiscretePath random_walk_path(std::size_t n, std::size_t steps, std::uint64_t seed,
                                     double dt = 0.01, double drift = -0.5) {
  const CounterStream s(seed, 0, StreamDomain::test);
  DiscretePath x(uniform_times(steps, dt), n);
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) x(0, i) = 0.2 * s.uniform(idx++);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 1; k <= steps; ++k)
    for (std::size_t i = 0; i < n; ++i)
      x(k, i) = x(k - 1, i) + drift * dt + sd * s.normal(idx++);
  return x;
}

}  // namespace atlas::oracle
