#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "atlas/errors.hpp"
#include "atlas/model.hpp"
#include "atlas/rng.hpp"

namespace atlas {

/// Product-form invariant law of (V, Z):
///   c_pi exp(-(v - g/n)^2) prod_i exp(-c_i z_i),  c_i = 2 g (n - i + 1) / n.
/// V is Normal(g/n, 1/2) and the gaps are independent exponentials.
struct StationaryLaw {
  std::size_t n = 1;
  double g = 1.0;
  double mean_v = 1.0;
  double var_v = 0.5;
  std::vector<double> rates;
  double c_pi = 0.0;
  double log_c_pi = 0.0;
};

inline StationaryLaw stationary_law(std::size_t n, double g) {
  if (n < 1) throw InputError("stationary_law: n must be >= 1");
  if (!(g > 0.0)) throw InputError("stationary_law: g must be > 0");
  StationaryLaw law;
  law.n = n;
  law.g = g;
  law.mean_v = g / static_cast<double>(n);
  law.rates.resize(n);
  // The Gaussian factor integrates to sqrt(pi), each exponential to 1 / c_i.
  law.log_c_pi = -0.5 * std::log(std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    law.rates[i] = 2.0 * g * static_cast<double>(n - i) / static_cast<double>(n);
    law.log_c_pi += std::log(law.rates[i]);
  }
  law.c_pi = std::exp(law.log_c_pi);
  return law;
}

inline StationaryLaw stationary_law(const ModelParams& p) { return stationary_law(p.n, p.g); }

namespace detail {
inline void check_point(const StationaryLaw& law, std::span<const double> z) {
  if (z.size() != law.n)
    throw InputError("stationary_density: z must have " + std::to_string(law.n) + " entries");
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] < 0.0)
      throw InputError("stationary_density: z" + std::to_string(i + 1) + " is negative");
}
}  // namespace detail

inline double stationary_log_density(const StationaryLaw& law, double v,
                                     std::span<const double> z) {
  detail::check_point(law, z);
  const double dv = v - law.mean_v;
  double s = law.log_c_pi - dv * dv;
  for (std::size_t i = 0; i < law.n; ++i) s -= law.rates[i] * z[i];
  return s;
}

inline double stationary_density(const StationaryLaw& law, double v,
                                 std::span<const double> z) {
  return std::exp(stationary_log_density(law, v, z));
}

struct StationaryDraw {
  double v = 0.0;
  std::vector<double> z;
};

/// Draw number `draw` from the product law under `seed`; every coordinate is
/// an inverse-CDF transform of one uniform.
inline StationaryDraw stationary_sample(const StationaryLaw& law, std::uint64_t seed,
                                        std::uint64_t draw = 0,
                                        StreamDomain domain = StreamDomain::stationary_sample) {
  const CounterStream s(seed, static_cast<std::uint32_t>(draw), domain);
  StationaryDraw d;
  d.v = law.mean_v + std::sqrt(law.var_v) * s.normal(0);
  d.z.resize(law.n);
  for (std::size_t i = 0; i < law.n; ++i) d.z[i] = s.exponential(2 + i, law.rates[i]);
  return d;
}

/// Second-order coefficients of the gap noise: h = A A^T, i.e. h_11 = 1,
/// h_ii = 2 for i >= 2, h_ij = -1 for |i - j| = 1.
inline std::vector<long long> h_coefficients(std::size_t n) {
  std::vector<long long> h(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    h[i * n + i] = i == 0 ? 1 : 2;
    if (i + 1 < n) h[i * n + i + 1] = h[(i + 1) * n + i] = -1;
  }
  return h;
}

/// sum_j h_ij (n - j + 1) == [i == 1] for every row, in integer arithmetic.
inline bool kronecker_identity_holds(std::size_t n) {
  const auto h = h_coefficients(n);
  const auto nn = static_cast<long long>(n);
  for (std::size_t i = 0; i < n; ++i) {
    long long s = 0;
    for (std::size_t j = 0; j < n; ++j) s += h[i * n + j] * (nn - static_cast<long long>(j));
    if (s != (i == 0 ? 1 : 0)) return false;
  }
  return true;
}

/// |1/2 sum_ij h_ij c_i c_j - 2 g^2 / n|
inline double bar_identity_residual(const StationaryLaw& law) {
  const auto h = h_coefficients(law.n);
  double s = 0.0;
  for (std::size_t i = 0; i < law.n; ++i)
    for (std::size_t j = 0; j < law.n; ++j)
      s += static_cast<double>(h[i * law.n + j]) * law.rates[i] * law.rates[j];
  return std::abs(0.5 * s - 2.0 * law.g * law.g / static_cast<double>(law.n));
}

struct BarProbe {
  double v = 0.0;
  std::vector<double> z;
};

struct BarResidual {
  double interior = 0.0;
  std::vector<double> boundary;  // one per face z_i = 0
  double identity = 0.0;
};

/// First and second derivatives of the density at a probe point.
struct DensityDerivatives {
  double value = 0.0;
  double dv = 0.0;
  std::vector<double> dz;   // d/dz_i
  std::vector<double> dzz;  // d^2/dz_i dz_j, n x n
};

inline DensityDerivatives closed_form_derivatives(const StationaryLaw& law, double v,
                                                  std::span<const double> z) {
  DensityDerivatives d;
  const std::size_t n = law.n;
  d.value = stationary_density(law, v, z);
  d.dv = -2.0 * (v - law.mean_v) * d.value;
  d.dz.resize(n);
  d.dzz.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    d.dz[i] = -law.rates[i] * d.value;
    for (std::size_t j = 0; j < n; ++j) d.dzz[i * n + j] = law.rates[i] * law.rates[j] * d.value;
  }
  return d;
}

/// Central differences in v and in interior z_i, one-sided second-order
/// differences at z_i = 0.
inline DensityDerivatives finite_difference_derivatives(const StationaryLaw& law, double v,
                                                        std::span<const double> z,
                                                        double step = 1e-5) {
  const std::size_t n = law.n;
  std::vector<double> zz(z.begin(), z.end());
  auto f = [&](double vv) { return stationary_density(law, vv, zz); };
  auto partial = [&](std::size_t i) {
    const double z0 = zz[i];
    double r;
    if (z0 >= step) {
      zz[i] = z0 + step;
      const double up = f(v);
      zz[i] = z0 - step;
      r = (up - f(v)) / (2.0 * step);
    } else {
      const double f0 = f(v);
      zz[i] = z0 + step;
      const double f1 = f(v);
      zz[i] = z0 + 2.0 * step;
      r = (-3.0 * f0 + 4.0 * f1 - f(v)) / (2.0 * step);
    }
    zz[i] = z0;
    return r;
  };

  DensityDerivatives d;
  d.value = f(v);
  d.dv = (f(v + step) - f(v - step)) / (2.0 * step);
  d.dz.resize(n);
  d.dzz.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d.dz[i] = partial(i);
  // Second derivatives only enter the interior condition; a coarser step
  // keeps cancellation error down.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double h2 = std::min(100.0 * step, 0.5 * std::min(zz[i], zz[j]));
      if (h2 <= 0.0) continue;
      auto at = [&](double si, double sj) {
        const double zi = zz[i], zj = zz[j];
        zz[i] += si;
        zz[j] += sj;
        const double r = f(v);
        zz[i] = zi;
        zz[j] = zj;
        return r;
      };
      d.dzz[i * n + j] = (at(h2, h2) - at(h2, -h2) - at(-h2, h2) + at(-h2, -h2)) / (4 * h2 * h2);
    }
  return d;
}

namespace detail {

inline double interior_operator(const StationaryLaw& law, double v, const DensityDerivatives& d) {
  const std::size_t n = law.n;
  const auto h = h_coefficients(n);
  double second = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      second += static_cast<double>(h[i * n + j]) * d.dzz[i * n + j];
  // d(v pi)/dz_1 = v dpi/dz_1
  return 0.5 * second - law.g * d.dv + v * d.dz[0];
}

/// Residual of the boundary condition on the face z_i = 0 (0-based i).
inline double face_operator(const StationaryLaw& law, std::size_t i, double v,
                            const DensityDerivatives& d) {
  const std::size_t n = law.n;
  if (i == 0) {
    const double dz2 = n >= 2 ? d.dz[1] : 0.0;
    return 2.0 * v * d.value + d.dz[0] - dz2 + d.dv;
  }
  if (i + 1 < n) return -d.dz[i - 1] + 2.0 * d.dz[i] - d.dz[i + 1];
  return -d.dz[i - 1] + 2.0 * d.dz[i];
}

}  // namespace detail

/// Interior and boundary residuals of the stationary equations at the probe
/// points, plus the algebraic identity the interior condition reduces to.
/// Probes must include at least one interior point and one point on every
/// face z_i = 0.
inline BarResidual verify_bar_identities(const ModelParams& params,
                                         std::span<const BarProbe> probes,
                                         bool finite_differences = false,
                                         double fd_step = 1e-5) {
  const auto law = stationary_law(params.n, params.g);
  const std::size_t n = law.n;
  BarResidual res;
  res.boundary.assign(n, 0.0);
  res.identity = bar_identity_residual(law);

  bool have_interior = false;
  std::vector<bool> have_face(n, false);
  for (const auto& p : probes) {
    const auto d = finite_differences ? finite_difference_derivatives(law, p.v, p.z, fd_step)
                                      : closed_form_derivatives(law, p.v, p.z);
    bool interior = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.z[i] != 0.0) continue;
      interior = false;
      have_face[i] = true;
      res.boundary[i] = std::max(res.boundary[i], std::abs(detail::face_operator(law, i, p.v, d)));
    }
    if (interior) {
      have_interior = true;
      res.interior = std::max(res.interior, std::abs(detail::interior_operator(law, p.v, d)));
    }
  }
  if (!have_interior) throw InputError("verify_bar_identities: no interior probe point");
  for (std::size_t i = 0; i < n; ++i)
    if (!have_face[i])
      throw InputError("verify_bar_identities: no probe on face z" + std::to_string(i + 1) +
                       " = 0");
  return res;
}

/// Random probe set: `count` interior points plus `count` points on each face.
/// Velocities are drawn within four standard deviations of the mean and gaps
/// within a few stationary means, so the density stays well above underflow.
inline std::vector<BarProbe> make_bar_probes(std::size_t n, double g, std::uint64_t seed,
                                             std::size_t count) {
  const auto law = stationary_law(n, g);
  const CounterStream s(seed, 0, StreamDomain::probes);
  std::uint64_t idx = 0;
  std::vector<BarProbe> out;
  auto draw = [&](std::ptrdiff_t face) {
    BarProbe p;
    p.v = law.mean_v + 4.0 * std::sqrt(law.var_v) * (2.0 * s.uniform(idx++) - 1.0);
    p.z.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      p.z[i] = static_cast<std::ptrdiff_t>(i) == face ? 0.0
                                                      : (0.01 + 2.0 * s.uniform(idx++)) / law.rates[i];
    out.push_back(std::move(p));
  };
  for (std::size_t c = 0; c < count; ++c) draw(-1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < count; ++c) draw(static_cast<std::ptrdiff_t>(i));
  return out;
}

}  // namespace atlas
