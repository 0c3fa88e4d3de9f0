#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atlas/dynamics.hpp"
#include "atlas/errors.hpp"
#include "atlas/stationary.hpp"

namespace atlas {

struct SlopeEstimate {
  double value = 0.0;
  double std_error = 0.0;  // batch-means standard error
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Long-run slopes: X0..Xn (ranked positions) -> g/n, L1 -> g,
/// Li -> 2 (n - i + 1) g / n for i >= 2.
inline std::map<std::string, double> lln_targets(std::size_t n, double g) {
  std::map<std::string, double> t;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) t["X" + std::to_string(i)] = g / nn;
  t["L1"] = g;
  for (std::size_t i = 2; i <= n; ++i)
    t["L" + std::to_string(i)] = 2.0 * static_cast<double>(n - i + 1) * g / nn;
  return t;
}

namespace detail {

inline std::size_t first_record_at_or_after(const std::vector<double>& t, double target) {
  const auto it = std::lower_bound(t.begin(), t.end(), target - 1e-9);
  return static_cast<std::size_t>(it - t.begin());
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = sxx > 0.0 && syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
  return f;
}

}  // namespace detail

/// Endpoint-ratio slope estimates over [burn_frac * T, T], with standard
/// errors from ten equal batches of the same window.
inline std::map<std::string, SlopeEstimate> lln_slopes(const Trajectory& tr, double burn_frac,
                                                       double horizon_floor = 100.0) {
  if (!(burn_frac >= 0.0 && burn_frac < 1.0))
    throw InputError("lln_slopes: burn_frac must lie in [0, 1)");
  if (tr.size() < 2) throw InputError("lln_slopes: trajectory has fewer than two records");
  const double horizon = tr.t.back();
  if (horizon < horizon_floor)
    throw InputError("lln_slopes: horizon " + std::to_string(horizon) +
                     " is below the floor of " + std::to_string(horizon_floor) +
                     " time units");
  const std::size_t n = tr.params.n;
  const std::size_t lo = detail::first_record_at_or_after(tr.t, burn_frac * horizon);
  const std::size_t hi = tr.size() - 1;
  if (lo >= hi) throw InputError("lln_slopes: burn-in leaves no window");

  constexpr std::size_t kBatches = 10;
  std::vector<std::size_t> cuts;
  for (std::size_t b = 0; b <= kBatches; ++b) {
    const double target = tr.t[lo] + (tr.t[hi] - tr.t[lo]) * static_cast<double>(b) / kBatches;
    cuts.push_back(b == kBatches ? hi : std::min(hi, detail::first_record_at_or_after(tr.t, target)));
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto estimate = [&](auto&& f) {
    SlopeEstimate e;
    e.t_lo = tr.t[lo];
    e.t_hi = tr.t[hi];
    e.value = (f(hi) - f(lo)) / (e.t_hi - e.t_lo);
    if (cuts.size() >= 3) {
      std::vector<double> s;
      for (std::size_t b = 0; b + 1 < cuts.size(); ++b)
        s.push_back((f(cuts[b + 1]) - f(cuts[b])) / (tr.t[cuts[b + 1]] - tr.t[cuts[b]]));
      const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      double var = 0.0;
      for (double x : s) var += (x - m) * (x - m);
      var /= static_cast<double>(s.size() - 1);
      e.std_error = std::sqrt(var / static_cast<double>(s.size()));
    }
    return e;
  };

  std::map<std::string, SlopeEstimate> out;
  for (std::size_t i = 0; i <= n; ++i)
    out["X" + std::to_string(i)] = estimate([&](std::size_t k) { return tr.ranked_position(k, i); });
  for (std::size_t i = 0; i < n; ++i)
    out["L" + std::to_string(i + 1)] = estimate([&](std::size_t k) { return tr.li(k, i); });
  return out;
}

/// Fraction of replicas whose final L_2 exceeds their final L_1.
inline double collision_ordering_test(std::span<const Trajectory> replicas) {
  if (replicas.size() < 10)
    throw InputError("collision_ordering_test: needs at least 10 replicas");
  std::size_t wins = 0;
  for (const auto& tr : replicas) {
    if (tr.params.n <= 2)
      throw InputError("collision_ordering_test: the ordering L2 > L1 only holds for n >= 3");
    const std::size_t k = tr.size() - 1;
    if (tr.li(k, 1) > tr.li(k, 0)) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(replicas.size());
}

/// Closed-form reference distribution for goodness-of-fit.
struct TargetLaw {
  enum class Kind { normal, exponential };
  Kind kind = Kind::normal;
  double a = 0.0;  // mean (normal) or rate (exponential)
  double b = 1.0;  // variance (normal)

  static TargetLaw normal(double mean, double variance) {
    if (!(variance > 0.0)) throw InputError("TargetLaw: variance must be > 0");
    return {Kind::normal, mean, variance};
  }
  static TargetLaw exponential(double rate) {
    if (!(rate > 0.0)) throw InputError("TargetLaw: rate must be > 0");
    return {Kind::exponential, rate, 0.0};
  }

  /// Parses "normal(mu,var)" or "exponential(rate)".
  static TargetLaw parse(const std::string& s) {
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw InputError("TargetLaw: unsupported target '" + s + "'");
    const std::string name = s.substr(0, open);
    const std::string args = s.substr(open + 1, close - open - 1);
    std::vector<double> v;
    std::size_t pos = 0;
    try {
      while (pos <= args.size()) {
        const auto comma = args.find(',', pos);
        v.push_back(std::stod(args.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } catch (const std::logic_error&) {
      throw InputError("TargetLaw: bad parameters in '" + s + "'");
    }
    if (name == "normal" && v.size() == 2) return normal(v[0], v[1]);
    if (name == "exponential" && v.size() == 1) return exponential(v[0]);
    throw InputError("TargetLaw: unsupported target '" + s + "'");
  }

  double cdf(double x) const {
    if (kind == Kind::normal) return 0.5 * std::erfc(-(x - a) / std::sqrt(2.0 * b));
    return x <= 0.0 ? 0.0 : -std::expm1(-a * x);
  }

  std::string name() const {
    char buf[96];
    if (kind == Kind::normal)
      std::snprintf(buf, sizeof buf, "normal(%.17g,%.17g)", a, b);
    else
      std::snprintf(buf, sizeof buf, "exponential(%.17g)", a);
    return buf;
  }
};

struct KsReport {
  double statistic = 0.0;
  std::size_t n_samples = 0;
  std::string target;
};

/// One-sample Kolmogorov-Smirnov statistic sup_x |F_n(x) - F(x)|.
inline KsReport ks_distance(std::span<const double> samples, const TargetLaw& target,
                            std::size_t min_samples = 100) {
  if (samples.size() < min_samples)
    throw InputError("ks_distance: needs at least " + std::to_string(min_samples) + " samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double f = target.cdf(s[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return {std::clamp(d, 0.0, 1.0), s.size(), target.name()};
}

inline KsReport ks_distance(std::span<const double> samples, const std::string& target) {
  return ks_distance(samples, TargetLaw::parse(target));
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

/// Asymptotic one-sample KS critical value at level 0.01.
inline double ks_critical_01(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Pools (V, Z_1..Z_n) at times burn_in, burn_in + thin, ... from every
/// replica and compares each coordinate with its stationary marginal.
/// Reports are ordered V, Z1, ..., Zn.
inline std::vector<KsReport> stationary_validation(std::span<const Trajectory> replicas,
                                                   const StationaryLaw& law, double burn_in,
                                                   double thin) {
  if (replicas.empty()) throw InputError("stationary_validation: no replicas");
  if (!(thin > 0.0)) throw InputError("stationary_validation: thin must be > 0");
  const std::size_t n = law.n;
  std::vector<std::vector<double>> pooled(n + 1);
  for (const auto& tr : replicas) {
    if (tr.params.n != n) throw InputError("stationary_validation: replica dimension mismatch");
    const double horizon = tr.t.back();
    if (!(burn_in < horizon))
      throw InputError("stationary_validation: burn_in must be below the horizon");
    for (std::size_t m = 0;; ++m) {
      const double target = burn_in + static_cast<double>(m) * thin;
      if (target > horizon + 1e-9) break;
      const std::size_t k = detail::first_record_at_or_after(tr.t, target);
      if (k >= tr.size()) break;
      pooled[0].push_back(tr.v[k]);
      for (std::size_t i = 0; i < n; ++i) pooled[i + 1].push_back(tr.zi(k, i));
    }
  }
  if (pooled[0].size() < 100)
    throw InputError("stationary_validation: only " + std::to_string(pooled[0].size()) +
                     " pooled samples (need 100)");
  std::vector<KsReport> out;
  out.push_back(ks_distance(pooled[0], TargetLaw::normal(law.mean_v, law.var_v)));
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(ks_distance(pooled[i + 1], TargetLaw::exponential(law.rates[i])));
  return out;
}

struct TailFit {
  double rate = 0.0;  // minus the slope of log survival
  double r2 = 0.0;
  std::size_t n_events = 0;
  bool degenerate = false;  // all events coincide; no slope is defined
};

/// Fits log S(t) = a - rate t over the empirical quantile range
/// [q_lo, q_hi] of the event times. `population` counts units that never
/// had the event before a common cap (right-censored); 0 means none.
inline TailFit survival_tail_fit(std::vector<double> times, double q_lo = 0.5,
                                 double q_hi = 0.95, std::size_t population = 0) {
  if (times.size() < 20)
    throw InputError("survival_tail_fit: only " + std::to_string(times.size()) +
                     " events (need 20)");
  std::sort(times.begin(), times.end());
  TailFit fit;
  fit.n_events = times.size();
  if (times.back() - times.front() <= 1e-12 * std::max(1.0, std::abs(times.back()))) {
    fit.degenerate = true;
    fit.rate = INFINITY;
    return fit;
  }
  if (population != 0 && population < times.size())
    throw InputError("survival_tail_fit: population smaller than the event count");
  const double n = static_cast<double>(std::max(population, times.size()));
  std::vector<double> x, y;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double cdf = static_cast<double>(k + 1) / n;
    if (cdf < q_lo || cdf > q_hi) continue;
    // Skip tied events so each time contributes its final survival level.
    if (k + 1 < times.size() && times[k + 1] == times[k]) continue;
    x.push_back(times[k]);
    y.push_back(std::log(1.0 - cdf));
  }
  if (x.size() < 3) {
    fit.degenerate = true;
    return fit;
  }
  const auto line = detail::fit_line(x, y);
  fit.rate = -line.slope;
  fit.r2 = line.r2;
  return fit;
}

/// First time V reaches `level` in a trajectory, linearly interpolated
/// between records; a trajectory stopped at the level reports its stop time.
inline std::optional<double> first_passage_time(const Trajectory& tr, double level) {
  if (tr.stopped_at) return tr.stopped_at;
  if (tr.size() == 0) return std::nullopt;
  const bool upward = tr.v[0] < level;
  if (tr.v[0] == level) return 0.0;
  for (std::size_t k = 1; k < tr.size(); ++k)
    if (detail::crossed(tr.v[k], level, upward)) {
      const double va = tr.v[k - 1], vb = tr.v[k];
      const double frac = vb == va ? 1.0 : (level - va) / (vb - va);
      return tr.t[k - 1] + std::clamp(frac, 0.0, 1.0) * (tr.t[k] - tr.t[k - 1]);
    }
  return std::nullopt;
}

inline TailFit hitting_time_tail(std::span<const Trajectory> replicas, double level) {
  std::vector<double> times;
  for (const auto& tr : replicas)
    if (auto t = first_passage_time(tr, level)) times.push_back(*t);
  if (times.size() < 20)
    throw InputError("hitting_time_tail: only " + std::to_string(times.size()) +
                     " replicas reach level " + std::to_string(level) + " (need 20)");
  // Replicas that never reach the level are censored at the common horizon.
  return survival_tail_fit(std::move(times), 0.5, 0.95, replicas.size());
}

/// Cross-replica sample of (V, Z) at one time.
struct EnsembleSlice {
  double t = 0.0;
  std::vector<double> v;
  std::vector<std::vector<double>> z;  // z[i] holds the samples of Z_{i+1}
};

inline std::vector<EnsembleSlice> ensemble_slices(std::span<const Trajectory> replicas,
                                                  std::span<const double> times) {
  if (replicas.empty()) throw InputError("ensemble_slices: no replicas");
  const std::size_t n = replicas.front().params.n;
  std::vector<EnsembleSlice> out;
  for (double t : times) {
    EnsembleSlice s;
    s.t = t;
    s.z.resize(n);
    for (const auto& tr : replicas) {
      const std::size_t k = detail::first_record_at_or_after(tr.t, t);
      if (k >= tr.size() || std::abs(tr.t[k] - t) > 1e-9 * std::max(1.0, t))
        throw InputError("ensemble_slices: no record at t = " + std::to_string(t));
      s.v.push_back(tr.v[k]);
      for (std::size_t i = 0; i < n; ++i) s.z[i].push_back(tr.zi(k, i));
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct DecayReport {
  std::vector<std::pair<double, double>> curve;  // (t, max-coordinate KS distance)
  TailFit fit;                                   // log distance vs t
};

/// Marginal-distance proxy for convergence to the invariant law: at each
/// slice the largest KS distance among V and the gaps, then an exponential
/// fit of distance against time.
inline DecayReport ergodic_decay_proxy(std::span<const EnsembleSlice> slices,
                                       const StationaryLaw& law) {
  if (slices.size() < 4) throw InputError("ergodic_decay_proxy: needs at least 4 time slices");
  DecayReport rep;
  std::vector<double> x, y;
  for (const auto& s : slices) {
    if (s.v.size() < 100)
      throw InputError("ergodic_decay_proxy: needs at least 100 replicas per slice");
    if (s.z.size() != law.n) throw InputError("ergodic_decay_proxy: slice dimension mismatch");
    double d = ks_distance(s.v, TargetLaw::normal(law.mean_v, law.var_v)).statistic;
    for (std::size_t i = 0; i < law.n; ++i)
      d = std::max(d, ks_distance(s.z[i], TargetLaw::exponential(law.rates[i])).statistic);
    rep.curve.emplace_back(s.t, d);
    x.push_back(s.t);
    y.push_back(std::log(std::max(d, 1e-300)));
  }
  const auto line = detail::fit_line(x, y);
  rep.fit.rate = -line.slope;
  rep.fit.r2 = line.r2;
  rep.fit.n_events = slices.size();
  return rep;
}

/// True when the curve decreases strictly until it first drops below
/// `noise_floor` and stays below the floor afterwards.
inline bool decreasing_beyond_noise(const std::vector<std::pair<double, double>>& curve,
                                    double noise_floor) {
  bool at_floor = false;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (!at_floor && curve[k - 1].second <= noise_floor) at_floor = true;
    if (at_floor) {
      if (curve[k].second > noise_floor) return false;
    } else if (!(curve[k].second < curve[k - 1].second)) {
      return false;
    }
  }
  return true;
}

}  // namespace atlas
