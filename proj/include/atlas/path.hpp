#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "atlas/errors.hpp"
#include "atlas/matrix.hpp"

namespace atlas {

/// Vector-valued samples on a time grid: values(k, i) is component i at
/// times[k].
struct DiscretePath {
  std::vector<double> times;
  Matrix values;

  DiscretePath() = default;
  DiscretePath(std::vector<double> t, std::size_t dim)
      : times(std::move(t)), values(times.size(), dim) {}
  DiscretePath(std::vector<double> t, Matrix v)
      : times(std::move(t)), values(std::move(v)) {}

  std::size_t size() const noexcept { return times.size(); }
  std::size_t dim() const noexcept { return values.cols(); }

  double& operator()(std::size_t k, std::size_t i) { return values(k, i); }
  double operator()(std::size_t k, std::size_t i) const { return values(k, i); }
  std::span<const double> at(std::size_t k) const { return values.row(k); }

  void validate() const {
    if (times.empty()) throw InputError("DiscretePath: empty grid");
    if (times[0] != 0.0) throw InputError("DiscretePath: times[0] must be 0");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1]))
        throw InputError("DiscretePath: times must be strictly increasing (index " +
                         std::to_string(k) + ")");
    if (values.rows() != times.size())
      throw InputError("DiscretePath: values row count differs from grid length");
  }
};

inline std::vector<double> uniform_times(std::size_t steps, double dt) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

/// sup over grid and components of |a - b|.
inline double sup_distance(const DiscretePath& a, const DiscretePath& b) {
  if (a.size() != b.size() || a.dim() != b.dim())
    throw InputError("sup_distance: paths have different shapes");
  return a.values.max_abs_diff(b.values);
}

}  // namespace atlas
