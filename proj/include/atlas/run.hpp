#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "atlas/analysis.hpp"
#include "atlas/config.hpp"
#include "atlas/dynamics.hpp"
#include "atlas/oracle.hpp"
#include "atlas/replicas.hpp"
#include "atlas/skorokhod.hpp"
#include "atlas/stationary.hpp"

namespace atlas {

enum class Command { simulate, lln, ordering, hitting, decay };

inline Command parse_command(const std::string& s) {
  if (s == "simulate") return Command::simulate;
  if (s == "lln") return Command::lln;
  if (s == "ordering") return Command::ordering;
  if (s == "hitting") return Command::hitting;
  if (s == "decay") return Command::decay;
  throw InputError("unknown command '" + s + "'");
}

inline const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::lln: return "lln";
    case Command::ordering: return "ordering";
    case Command::hitting: return "hitting";
    case Command::decay: return "decay";
  }
  return "?";
}

/// Initial state of replica `index`. Stationary starts draw from the
/// product law with the replica's own seed; unranked starts are reduced to
/// the gaps of the sorted positions.
inline ModelParams initial_params(const RunConfig& c, std::uint64_t seed) {
  ModelParams p;
  p.n = c.n;
  p.g = c.g;
  switch (c.init.kind) {
    case InitSpec::Kind::stationary: {
      const auto d = stationary_sample(stationary_law(c.n, c.g), seed, 0,
                                       StreamDomain::initial_state);
      p.v0 = d.v;
      p.z0 = d.z;
      break;
    }
    case InitSpec::Kind::point:
      p.v0 = c.init.v;
      p.z0 = c.init.z;
      break;
    case InitSpec::Kind::unranked: {
      p.v0 = c.init.v;
      auto above = std::vector<double>(c.init.x.begin() + 1, c.init.x.end());
      std::sort(above.begin(), above.end());
      double prev = c.init.x[0];
      for (double x : above) {
        p.z0.push_back(x - prev);
        prev = x;
      }
      break;
    }
  }
  return p;
}

inline SimOptions sim_options(const RunConfig& c) {
  SimOptions o;
  o.window = c.window;
  o.brownian_level = c.refine;
  o.record_stride = c.record_stride();
  return o;
}

/// Replica `i` is simulated under replica_seed(base_seed, i), independent of
/// which worker runs it.
inline std::vector<Trajectory> simulate_batch(const RunConfig& c, unsigned jobs,
                                              const SimOptions& opt, const SimGrid& grid) {
  return run_replicas(c.replicas, jobs, [&](std::size_t i) {
    const auto seed = replica_seed(c.base_seed, i);
    return simulate_gap_process(initial_params(c, seed), grid, seed, opt);
  });
}

inline std::vector<Trajectory> simulate_batch(const RunConfig& c, unsigned jobs) {
  return simulate_batch(c, jobs, sim_options(c), c.grid);
}

namespace detail {

inline json seed_set(const RunConfig& c) {
  return {{"base_seed", c.base_seed},
          {"replicas", c.replicas},
          {"derivation", "philox4x32(base_seed, replica_index)"}};
}

inline json op_header(const char* op, const RunConfig& c) {
  return {{"op", op}, {"params_digest", config_digest(c)}, {"seed_set", seed_set(c)}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::filesystem::filesystem_error("cannot open for writing", p,
                                                   std::make_error_code(std::errc::io_error));
  os << text;
  if (!os) throw std::filesystem::filesystem_error("write failed", p,
                                                   std::make_error_code(std::errc::io_error));
}

}  // namespace detail

/// Per-key slopes averaged over replicas. The standard error is the spread
/// across replicas when there are several, else the batch-means error.
inline json lln_report(const RunConfig& c, std::span<const Trajectory> reps) {
  json r = detail::op_header("lln", c);
  const double burn_frac = c.burn_in / c.grid.t_end;
  std::vector<std::map<std::string, SlopeEstimate>> per;
  for (const auto& tr : reps) per.push_back(lln_slopes(tr, burn_frac));
  const auto targets = lln_targets(c.n, c.g);
  json est = json::array(), tgt = json::array();
  bool pass = true;
  auto ordered_keys = [&] {
    std::vector<std::string> keys;
    for (std::size_t i = 0; i <= c.n; ++i) keys.push_back("X" + std::to_string(i));
    for (std::size_t i = 1; i <= c.n; ++i) keys.push_back("L" + std::to_string(i));
    return keys;
  }();
  for (const auto& key : ordered_keys) {
    const double m = static_cast<double>(per.size());
    double mean = 0.0;
    for (const auto& p : per) mean += p.at(key).value;
    mean /= m;
    double se = 0.0;
    if (per.size() >= 2) {
      for (const auto& p : per) se += (p.at(key).value - mean) * (p.at(key).value - mean);
      se = std::sqrt(se / (m - 1.0) / m);
    } else {
      se = per.front().at(key).std_error;
    }
    const double tol = key[0] == 'X'  ? c.thresholds.lln_x_abs
                       : key == "L1" ? c.thresholds.lln_l1_abs
                                     : c.thresholds.lln_l_abs;
    const bool ok = std::abs(mean - targets.at(key)) <= tol;
    pass = pass && ok;
    est.push_back({{"name", key},
                   {"value", mean},
                   {"std_error", se},
                   {"t_lo", per.front().at(key).t_lo},
                   {"t_hi", per.front().at(key).t_hi}});
    tgt.push_back({{"name", key}, {"value", targets.at(key)}, {"tolerance", tol}, {"pass", ok}});
  }
  r["estimates"] = est;
  r["targets"] = tgt;
  r["pass"] = pass;
  return r;
}

inline json stationary_report(const RunConfig& c, std::span<const Trajectory> reps) {
  json r = detail::op_header("stationary", c);
  const auto law = stationary_law(c.n, c.g);
  const auto ks = stationary_validation(reps, law, c.burn_in, c.thin);
  json est = json::array(), tgt = json::array();
  bool pass = true;
  for (std::size_t k = 0; k < ks.size(); ++k) {
    const std::string name = k == 0 ? "V" : "Z" + std::to_string(k);
    const bool ok = ks[k].statistic <= c.thresholds.ks_max;
    pass = pass && ok;
    est.push_back({{"name", name}, {"ks", ks[k].statistic}, {"n_samples", ks[k].n_samples}});
    tgt.push_back({{"name", name}, {"law", ks[k].target},
                   {"ks_max", c.thresholds.ks_max}, {"pass", ok}});
  }
  r["estimates"] = est;
  r["targets"] = tgt;
  r["pass"] = pass;
  return r;
}

inline json ordering_report(const RunConfig& c, std::span<const Trajectory> reps) {
  json r = detail::op_header("ordering", c);
  const double frac = collision_ordering_test(reps);
  r["estimates"] = json::array({{{"name", "fraction_L2_gt_L1"}, {"value", frac}}});
  r["targets"] = json::array({{{"name", "fraction_L2_gt_L1"}, {"min", c.thresholds.ordering_min}}});
  r["pass"] = frac >= c.thresholds.ordering_min;
  return r;
}

/// Separate batch that stops each replica when V first reaches the level.
inline json hitting_report(const RunConfig& c, unsigned jobs) {
  json r = detail::op_header("hitting", c);
  const auto& h = *c.outputs.hitting;
  auto opt = sim_options(c);
  opt.stop_at_velocity = h.level;
  const auto grid = SimGrid::make(c.grid.dt, h.t_max);
  opt.record_stride = grid.steps;  // only the endpoints matter
  const auto reps = simulate_batch(c, jobs, opt, grid);
  std::size_t hits = 0;
  for (const auto& tr : reps)
    if (first_passage_time(tr, h.level)) ++hits;
  const auto fit = hitting_time_tail(reps, h.level);
  const bool ok = !fit.degenerate && fit.rate > 0.0 && fit.r2 >= c.thresholds.hitting_r2_min;
  r["estimates"] = json::array({{{"name", "tail_rate"}, {"value", fit.rate}},
                                {{"name", "r2"}, {"value", fit.r2}},
                                {{"name", "hits"}, {"value", hits}},
                                {{"name", "degenerate"}, {"value", fit.degenerate}}});
  r["targets"] = json::array({{{"name", "tail_rate"}, {"min_exclusive", 0.0}},
                              {{"name", "r2"}, {"min", c.thresholds.hitting_r2_min}}});
  r["level"] = h.level;
  r["pass"] = ok;
  return r;
}

inline json decay_report(const RunConfig& c, std::span<const Trajectory> reps,
                         std::vector<std::pair<double, double>>* curve_out = nullptr) {
  json r = detail::op_header("decay", c);
  const auto law = stationary_law(c.n, c.g);
  const auto slices = ensemble_slices(reps, c.outputs.decay->slices);
  const auto rep = ergodic_decay_proxy(slices, law);
  const double floor = ks_critical_01(reps.size());
  const bool decreasing = decreasing_beyond_noise(rep.curve, floor);
  json est = json::array();
  for (const auto& [t, d] : rep.curve) est.push_back({{"t", t}, {"distance", d}});
  r["estimates"] = est;
  r["fit"] = {{"rate", rep.fit.rate}, {"r2", rep.fit.r2}};
  r["targets"] = json::array({{{"name", "decreasing_beyond_noise"}, {"noise_floor", floor},
                               {"value", decreasing}},
                              {{"name", "rate"}, {"min_exclusive", 0.0}}});
  r["pass"] = decreasing && rep.fit.rate > 0.0;
  if (curve_out) *curve_out = rep.curve;
  return r;
}

struct RunOutcome {
  json report;
  bool pass = false;
  std::vector<std::string> failures;
};

/// Runs one command. Analyses that refuse their input count as failures;
/// configuration problems are thrown before any simulation starts. Files
/// are written only when `out_dir` is non-empty.
inline RunOutcome run(const RunConfig& cfg, Command cmd, unsigned jobs,
                      const std::filesystem::path& out_dir = {}) {
  RunConfig c = cfg;
  if (cmd != Command::simulate) {
    const auto h = c.outputs.hitting;
    const auto d = c.outputs.decay;
    c.outputs = Outputs{};
    if (cmd == Command::lln) c.outputs.lln = true;
    if (cmd == Command::ordering) c.outputs.ordering = true;
    if (cmd == Command::hitting) {
      if (!h) throw InputError("config: command 'hitting' needs outputs.hitting.level");
      c.outputs.hitting = h;
    }
    if (cmd == Command::decay) {
      if (!d) throw InputError("config: command 'decay' needs outputs.decay.slices");
      c.outputs.decay = d;
    }
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  RunOutcome out;
  json reports = json::array();
  auto attempt = [&](const char* op, auto&& fn) {
    try {
      json r = fn();
      if (!r.at("pass").get<bool>()) {
        std::string why;
        for (const auto& t : r.at("targets"))
          if (t.contains("pass") && !t.at("pass").get<bool>())
            why += (why.empty() ? "" : ", ") + t.at("name").get<std::string>();
        out.failures.push_back(std::string(op) + ": threshold not met" +
                               (why.empty() ? std::string() : " (" + why + ")"));
      }
      reports.push_back(std::move(r));
    } catch (const InputError& e) {
      json r = detail::op_header(op, c);
      r["pass"] = false;
      r["error"] = e.what();
      out.failures.push_back(std::string(op) + ": " + e.what());
      reports.push_back(std::move(r));
    }
  };

  const auto& o = c.outputs;
  const bool need_batch = o.trajectory_csv || o.lln || o.stationary || o.ordering || o.decay;
  std::vector<Trajectory> reps;
  if (need_batch) reps = simulate_batch(c, jobs);

  if (o.trajectory_csv) {
    std::vector<std::string> files;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "trajectory_%04zu.csv", i);
      files.emplace_back(name);
      if (!out_dir.empty()) {
        std::ofstream os(out_dir / name, std::ios::binary);
        if (!os)
          throw std::filesystem::filesystem_error("cannot open for writing", out_dir / name,
                                                  std::make_error_code(std::errc::io_error));
        write_trajectory_csv(os, reps[i]);
      }
    }
    json r = detail::op_header("trajectory_csv", c);
    r["files"] = files;
    r["pass"] = true;
    reports.push_back(std::move(r));
  }
  if (o.lln) attempt("lln", [&] { return lln_report(c, reps); });
  if (o.stationary) attempt("stationary", [&] { return stationary_report(c, reps); });
  if (o.ordering) attempt("ordering", [&] { return ordering_report(c, reps); });
  if (o.decay) attempt("decay", [&] {
    std::vector<std::pair<double, double>> curve;
    json r = decay_report(c, reps, &curve);
    if (!out_dir.empty()) {
      std::string csv = "t,distance\n";
      char line[96];
      for (const auto& [t, d] : curve) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", t, d);
        csv += line;
      }
      detail::write_text(out_dir / "decay.csv", csv);
    }
    return r;
  });
  if (o.hitting) attempt("hitting", [&] { return hitting_report(c, jobs); });

  out.pass = out.failures.empty();
  out.report = {{"command", command_name(cmd)},
                {"config_digest", config_digest(c)},
                {"config", canonical_config(c)},
                {"reports", reports},
                {"failures", out.failures},
                {"pass", out.pass}};
  if (!out_dir.empty()) detail::write_text(out_dir / "report.json", out.report.dump(2) + "\n");
  return out;
}

/// Exact identities and probe-point residuals of the stationary equations
/// for one (n, g). Tolerances: 1e-12 g^2 on the identity, 1e-10 c_pi on the
/// residuals.
inline json stationary_check_report(std::size_t n, double g, std::uint64_t seed,
                                    std::size_t probes = 100) {
  ModelParams p;
  p.n = n;
  p.g = g;
  p.z0.assign(n, 0.0);
  p.validate();
  const auto law = stationary_law(n, g);
  const auto pts = make_bar_probes(n, g, seed, probes);
  const auto res = verify_bar_identities(p, pts);
  const double tol = 1e-10 * law.c_pi;
  bool pass = res.identity <= 1e-12 * g * g && kronecker_identity_holds(n) && res.interior <= tol;
  for (double b : res.boundary) pass = pass && b <= tol;
  return {{"identity_residual", res.identity},
          {"interior_residual", res.interior},
          {"boundary_residuals", res.boundary},
          {"kronecker_identity", kronecker_identity_holds(n)},
          {"c_pi", law.c_pi},
          {"N", n},
          {"g", g},
          {"pass", pass}};
}

/// Solver against the enumeration oracle on random walk inputs.
inline json skorokhod_test_report(std::size_t n, std::size_t steps, std::size_t trials,
                                  std::uint64_t seed, double tol = 1e-10) {
  if (n < 1 || n > 12) throw InputError("skorokhod-test: n must lie in 1..12");
  if (steps < 1 || trials < 1) throw InputError("skorokhod-test: steps and trials must be >= 1");
  const auto rm = build_reflection_matrix(n);
  SkorokhodOptions opt;
  opt.tol = 1e-12;
  double worst = 0.0, worst_comp_ratio = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = oracle::random_walk_path(n, steps, replica_seed(seed, t));
    const auto sol = solve_skorokhod(x, rm, opt);
    worst = std::max(worst, sup_distance(sol.eta, oracle::regulator_by_enumeration(x, rm.r)));
    for (double r : complementarity_residual(sol))
      worst_comp_ratio = std::max(worst_comp_ratio, r / (tol * static_cast<double>(steps)));
  }
  return {{"N", n},
          {"steps", steps},
          {"trials", trials},
          {"max_oracle_deviation", worst},
          {"tolerance", tol},
          {"max_complementarity_over_budget", worst_comp_ratio},
          {"pass", worst <= tol && worst_comp_ratio <= 1.0}};
}

}  // namespace atlas
