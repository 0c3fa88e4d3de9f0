#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "atlas/errors.hpp"
#include "atlas/model.hpp"
#include "atlas/path.hpp"

namespace atlas {

/// Discrete Skorokhod problem on the orthant for the reflection matrix R:
/// find a nondecreasing regulator eta with eta(0) = 0 such that
/// y = x + R eta >= 0 and eta_i only grows when y_i = 0. On the grid the
/// regulator is the fixed point of
///
///   eta_i(t_k) = max_{m <= k} ( -x_i(t_m) + (U eta(t_m))_i )^+ .
///
/// Two fixed-point schemes reach it:
///  - picard: sweeps of the whole path, each a single pass with a running
///    maximum, starting from eta == 0. Within a grid point the components
///    are updated in Gauss-Seidel order; pure Jacobi sweeps oscillate
///    because U couples only neighbouring gaps;
///  - causal: march forward in time and iterate the same recursion at each
///    grid point (Gauss-Seidel over components) until it stagnates. This is
///    the scheme the simulators use; it needs no path-length sweeps.
enum class SkorokhodScheme { picard, causal };

struct SkorokhodOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  SkorokhodScheme scheme = SkorokhodScheme::picard;
};

struct SkorokhodSolution {
  DiscretePath eta;
  DiscretePath y;
  int iterations = 0;
  double residual = 0.0;
  /// Sup-norm distance between successive iterates (picard scheme only).
  std::vector<double> iterate_gaps;
};

/// Forward-in-time reflection of a single grid point. Holds scratch space so
/// the simulators can call it without allocating.
class StepReflector {
 public:
  StepReflector() = default;
  explicit StepReflector(const ReflectionMatrix& rm, double tol = 1e-10,
                         int max_sweeps = 100000)
      : u_(&rm.u), n_(rm.size()), tol_(tol), max_sweeps_(max_sweeps) {}

  /// Advances eta (holding eta at the previous grid point) to the current
  /// grid point for input x. Returns the number of sweeps; throws on
  /// stagnation failure.
  int advance(std::span<const double> x, std::span<double> eta) const {
    const Matrix& u = *u_;
    // Fast path: no face is violated, the regulator stays put.
    bool active = false;
    for (std::size_t i = 0; i < n_ && !active; ++i) {
      double push = 0.0;
      const auto row = u.row(i);
      for (std::size_t j = 0; j < n_; ++j) push += row[j] * eta[j];
      if (-x[i] + push > eta[i]) active = true;
    }
    if (!active) return 0;

    for (int sweep = 1; sweep <= max_sweeps_; ++sweep) {
      double change = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        double push = 0.0;
        const auto row = u.row(i);
        for (std::size_t j = 0; j < n_; ++j) push += row[j] * eta[j];
        const double cand = -x[i] + push;
        if (cand > eta[i]) {
          change = std::max(change, cand - eta[i]);
          eta[i] = cand;
        }
      }
      if (change < tol_) return sweep;
    }
    throw ConvergenceError("StepReflector: sweep limit reached", tol_, max_sweeps_);
  }

  std::size_t size() const noexcept { return n_; }

 private:
  const Matrix* u_ = nullptr;
  std::size_t n_ = 0;
  double tol_ = 1e-10;
  int max_sweeps_ = 100000;
};

namespace detail {

inline void check_skorokhod_inputs(const DiscretePath& x,
                                   const ReflectionMatrix& rm,
                                   const SkorokhodOptions& opt) {
  x.validate();
  if (x.dim() != rm.size())
    throw InputError("solve_skorokhod: path dimension " + std::to_string(x.dim()) +
                     " does not match R of size " + std::to_string(rm.size()));
  if (!(opt.tol > 0.0)) throw InputError("solve_skorokhod: tol must be > 0");
  if (opt.max_iter < 1) throw InputError("solve_skorokhod: max_iter must be >= 1");
  for (std::size_t i = 0; i < x.dim(); ++i)
    if (x(0, i) < 0.0)
      throw InputError("solve_skorokhod: x(0) has negative component " +
                       std::to_string(i));
}

inline DiscretePath reflected_path(const DiscretePath& x, const DiscretePath& eta,
                                   const ReflectionMatrix& rm) {
  DiscretePath y(x.times, x.dim());
  std::vector<double> push(x.dim());
  for (std::size_t k = 0; k < x.size(); ++k) {
    rm.r.apply(eta.at(k), push);
    for (std::size_t i = 0; i < x.dim(); ++i) y(k, i) = x(k, i) + push[i];
  }
  return y;
}

inline SkorokhodSolution solve_picard(const DiscretePath& x,
                                      const ReflectionMatrix& rm,
                                      const SkorokhodOptions& opt) {
  const std::size_t n = x.dim();
  const std::size_t steps = x.size();
  DiscretePath eta(x.times, n);
  DiscretePath next(x.times, n);
  std::vector<double> running(n);

  SkorokhodSolution sol;
  for (int it = 1; it <= opt.max_iter; ++it) {
    std::fill(running.begin(), running.end(), 0.0);
    double gap = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        // Components already updated at this grid point are used at once.
        double p = 0.0;
        for (std::size_t j = 0; j < n; ++j) p += rm.u(i, j) * (j < i ? next(k, j) : eta(k, j));
        running[i] = std::max(running[i], -x(k, i) + p);
        gap = std::max(gap, std::abs(running[i] - eta(k, i)));
        next(k, i) = running[i];
      }
    }
    std::swap(eta, next);
    sol.iterate_gaps.push_back(gap);
    sol.iterations = it;
    sol.residual = gap;
    if (gap < opt.tol) {
      sol.y = reflected_path(x, eta, rm);
      sol.eta = std::move(eta);
      return sol;
    }
  }
  throw ConvergenceError("solve_skorokhod: Picard iteration did not converge",
                         sol.residual, sol.iterations);
}

inline SkorokhodSolution solve_causal(const DiscretePath& x,
                                      const ReflectionMatrix& rm,
                                      const SkorokhodOptions& opt) {
  const std::size_t n = x.dim();
  DiscretePath eta(x.times, n);
  StepReflector step(rm, opt.tol, opt.max_iter);
  std::vector<double> current(n, 0.0);
  SkorokhodSolution sol;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sol.iterations = std::max(sol.iterations, step.advance(x.at(k), current));
    for (std::size_t i = 0; i < n; ++i) eta(k, i) = current[i];
  }
  sol.residual = 0.0;
  sol.y = reflected_path(x, eta, rm);
  sol.eta = std::move(eta);
  return sol;
}

}  // namespace detail

inline SkorokhodSolution solve_skorokhod(const DiscretePath& x,
                                         const ReflectionMatrix& rm,
                                         const SkorokhodOptions& opt = {}) {
  detail::check_skorokhod_inputs(x, rm, opt);
  return opt.scheme == SkorokhodScheme::picard ? detail::solve_picard(x, rm, opt)
                                               : detail::solve_causal(x, rm, opt);
}

/// Per-component discrete complementarity sum_k y_i(t_k) (eta_i(t_k) - eta_i(t_{k-1})).
inline std::vector<double> complementarity_residual(const SkorokhodSolution& sol) {
  const std::size_t n = sol.eta.dim();
  std::vector<double> res(n, 0.0);
  for (std::size_t k = 1; k < sol.eta.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      res[i] += std::abs(sol.y(k, i)) * (sol.eta(k, i) - sol.eta(k - 1, i));
  return res;
}

/// (|eta1 - eta2|_T + |y1 - y2|_T) / |x1 - x2|_T, an empirical lower bound for
/// the Lipschitz constant of the Skorokhod map.
inline double skorokhod_lipschitz_probe(const DiscretePath& x1, const DiscretePath& x2,
                                        const ReflectionMatrix& rm,
                                        const SkorokhodOptions& opt = {}) {
  if (x1.times != x2.times)
    throw InputError("skorokhod_lipschitz_probe: paths must share a grid");
  const double denom = sup_distance(x1, x2);
  if (denom == 0.0)
    throw InputError("skorokhod_lipschitz_probe: identical inputs");
  const auto s1 = solve_skorokhod(x1, rm, opt);
  const auto s2 = solve_skorokhod(x2, rm, opt);
  return (sup_distance(s1.eta, s2.eta) + sup_distance(s1.y, s2.y)) / denom;
}

}  // namespace atlas
