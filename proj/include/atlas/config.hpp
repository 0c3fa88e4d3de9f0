#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "atlas/dynamics.hpp"
#include "atlas/errors.hpp"
#include "atlas/model.hpp"
#include "json.hpp"

namespace atlas {

using json = nlohmann::json;

struct InitSpec {
  enum class Kind { stationary, point, unranked };
  Kind kind = Kind::stationary;
  double v = 0.0;
  std::vector<double> z;  // point
  std::vector<double> x;  // unranked positions, inert particle first
};

struct HittingSpec {
  double level = 0.0;
  double t_max = 0.0;  // per-replica horizon cap
};

struct DecaySpec {
  std::vector<double> slices;
};

struct Thresholds {
  double lln_x_abs = 0.05;   // ranked-position slopes
  double lln_l1_abs = 0.05;
  double lln_l_abs = 0.1;    // L_i, i >= 2
  double ks_max = 0.05;
  double ordering_min = 0.95;
  double hitting_r2_min = 0.9;
};

struct Outputs {
  bool trajectory_csv = false;
  bool lln = false;
  bool stationary = false;
  bool ordering = false;
  std::optional<HittingSpec> hitting;
  std::optional<DecaySpec> decay;
};

struct RunConfig {
  std::size_t n = 1;
  double g = 1.0;
  SimGrid grid;
  double window = 0.1;
  int refine = 0;  // dt halves a coarser grid this many times (shared Brownian path)
  double record_every = 1.0;
  std::size_t replicas = 1;
  std::uint64_t base_seed = 0;
  InitSpec init;
  Outputs outputs;
  double burn_in = 0.0;
  double thin = 1.0;
  Thresholds thresholds;

  std::size_t record_stride() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_every / grid.dt)));
  }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& section,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InputError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key))
      throw InputError("config: unknown key '" + key + "'" +
                       (section.empty() ? std::string() : " in '" + section + "'"));
}

inline double get_number(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw InputError("config: field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::optional<double> opt_number(const json& obj, const std::string& key) {
  if (!obj.contains(key)) return std::nullopt;
  return get_number(obj, key);
}

inline double need_number(const json& obj, const std::string& key, const std::string& section) {
  if (!obj.contains(key))
    throw InputError("config: missing required field '" + key + "' in '" + section + "'");
  return get_number(obj, key);
}

inline std::uint64_t get_unsigned(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw InputError("config: field '" + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> get_vector(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw InputError("config: field '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number())
      throw InputError("config: field '" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline bool get_bool(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw InputError("config: field '" + key + "' must be true or false");
  return v.get<bool>();
}

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw InputError("config: field '" + field + "' " + what);
}

}  // namespace detail

/// Strict validation of a run configuration. Every key is known, every
/// constraint is checked, and each error names the offending field.
inline RunConfig validate_config(const json& doc) {
  using namespace detail;
  check_keys(doc, "", {"model", "grid", "replicas", "seed", "init", "outputs", "burn_in",
                       "thin", "thresholds"});
  RunConfig c;

  if (!doc.contains("model")) throw InputError("config: missing required section 'model'");
  const auto& model = doc.at("model");
  check_keys(model, "model", {"n", "g"});
  if (!model.contains("n")) throw InputError("config: missing required field 'n' in 'model'");
  c.n = get_unsigned(model, "n");
  require(c.n >= 1, "n", "must be >= 1");
  c.g = need_number(model, "g", "model");
  require(c.g > 0.0, "g", "must be > 0");

  if (!doc.contains("grid")) throw InputError("config: missing required section 'grid'");
  const auto& grid = doc.at("grid");
  check_keys(grid, "grid", {"t_end", "dt", "window", "record_every", "refine"});
  const double t_end = need_number(grid, "t_end", "grid");
  const double dt = opt_number(grid, "dt").value_or(1e-3);
  require(dt > 0.0, "dt", "must be > 0");
  require(t_end >= dt, "t_end", "must be >= dt");
  require(std::abs(std::round(t_end / dt) * dt - t_end) <= 1e-9, "t_end",
          "must be an integer multiple of dt");
  c.grid = SimGrid::make(dt, t_end);
  c.window = opt_number(grid, "window").value_or(0.1);
  require(c.window >= dt, "window", "must be >= dt");
  if (grid.contains("refine")) {
    const auto r = get_unsigned(grid, "refine");
    require(r <= 20, "refine", "must lie in 0..20");
    c.refine = static_cast<int>(r);
  }

  if (doc.contains("replicas")) c.replicas = get_unsigned(doc, "replicas");
  require(c.replicas >= 1, "replicas", "must be >= 1");
  if (doc.contains("seed")) c.base_seed = get_unsigned(doc, "seed");

  c.thin = opt_number(doc, "thin").value_or(1.0);
  require(c.thin > 0.0, "thin", "must be > 0");
  c.burn_in = opt_number(doc, "burn_in").value_or(0.1 * t_end);
  require(c.burn_in >= 0.0, "burn_in", "must be >= 0");
  require(c.burn_in < t_end, "burn_in", "must be below grid.t_end");
  c.record_every = opt_number(grid, "record_every").value_or(std::min(c.thin, t_end));
  require(c.record_every >= dt, "record_every", "must be >= dt");

  if (doc.contains("init")) {
    const auto& init = doc.at("init");
    check_keys(init, "init", {"kind", "v", "z", "x"});
    if (!init.contains("kind") || !init.at("kind").is_string())
      throw InputError("config: field 'kind' in 'init' must be a string");
    const auto kind = init.at("kind").get<std::string>();
    if (kind == "stationary") {
      require(!init.contains("v") && !init.contains("z") && !init.contains("x"), "kind",
              "'stationary' takes no v, z or x");
      c.init.kind = InitSpec::Kind::stationary;
    } else if (kind == "point") {
      c.init.kind = InitSpec::Kind::point;
      c.init.v = need_number(init, "v", "init");
      if (!init.contains("z")) throw InputError("config: missing required field 'z' in 'init'");
      c.init.z = get_vector(init, "z");
      require(c.init.z.size() == c.n, "z", "must have n entries");
      for (double z : c.init.z) require(z >= 0.0, "z", "entries must be >= 0");
      require(!init.contains("x"), "x", "is only valid for kind 'unranked'");
    } else if (kind == "unranked") {
      c.init.kind = InitSpec::Kind::unranked;
      c.init.v = opt_number(init, "v").value_or(0.0);
      if (!init.contains("x")) throw InputError("config: missing required field 'x' in 'init'");
      c.init.x = get_vector(init, "x");
      require(c.init.x.size() == c.n + 1, "x", "must have n + 1 entries");
      for (std::size_t i = 1; i <= c.n; ++i)
        require(c.init.x[i] >= c.init.x[0], "x", "entries must not lie below x[0]");
      require(!init.contains("z"), "z", "is only valid for kind 'point'");
    } else {
      throw InputError("config: field 'kind' in 'init' must be one of stationary, point, unranked");
    }
  }

  if (doc.contains("outputs")) {
    const auto& out = doc.at("outputs");
    check_keys(out, "outputs",
               {"trajectory_csv", "lln", "stationary", "ordering", "hitting", "decay"});
    if (out.contains("trajectory_csv")) c.outputs.trajectory_csv = get_bool(out, "trajectory_csv");
    if (out.contains("lln")) c.outputs.lln = get_bool(out, "lln");
    if (out.contains("stationary")) c.outputs.stationary = get_bool(out, "stationary");
    if (out.contains("ordering")) c.outputs.ordering = get_bool(out, "ordering");
    if (out.contains("hitting")) {
      const auto& h = out.at("hitting");
      check_keys(h, "hitting", {"level", "t_max"});
      HittingSpec hs;
      hs.level = need_number(h, "level", "hitting");
      hs.t_max = opt_number(h, "t_max").value_or(t_end);
      require(hs.t_max >= dt, "t_max", "must be >= dt");
      require(std::abs(std::round(hs.t_max / dt) * dt - hs.t_max) <= 1e-9 * std::max(1.0, hs.t_max),
              "t_max", "must be an integer multiple of dt");
      c.outputs.hitting = hs;
    }
    if (out.contains("decay")) {
      const auto& d = out.at("decay");
      check_keys(d, "decay", {"slices"});
      if (!d.contains("slices"))
        throw InputError("config: missing required field 'slices' in 'decay'");
      DecaySpec ds{get_vector(d, "slices")};
      for (std::size_t k = 0; k < ds.slices.size(); ++k) {
        require(ds.slices[k] >= 0.0 && ds.slices[k] <= t_end, "slices",
                "entries must lie in [0, t_end]");
        if (k > 0) require(ds.slices[k] > ds.slices[k - 1], "slices", "must be increasing");
      }
      c.outputs.decay = ds;
    }
  }

  if (doc.contains("thresholds")) {
    const auto& t = doc.at("thresholds");
    check_keys(t, "thresholds",
               {"lln_x_abs", "lln_l1_abs", "lln_l_abs", "ks_max", "ordering_min", "hitting_r2_min"});
    c.thresholds.lln_x_abs = opt_number(t, "lln_x_abs").value_or(c.thresholds.lln_x_abs);
    c.thresholds.lln_l1_abs = opt_number(t, "lln_l1_abs").value_or(c.thresholds.lln_l1_abs);
    c.thresholds.lln_l_abs = opt_number(t, "lln_l_abs").value_or(c.thresholds.lln_l_abs);
    c.thresholds.ks_max = opt_number(t, "ks_max").value_or(c.thresholds.ks_max);
    c.thresholds.ordering_min = opt_number(t, "ordering_min").value_or(c.thresholds.ordering_min);
    c.thresholds.hitting_r2_min =
        opt_number(t, "hitting_r2_min").value_or(c.thresholds.hitting_r2_min);
  }
  return c;
}

inline RunConfig validate_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: parse error: ") + e.what());
  }
  return validate_config(doc);
}

inline RunConfig validate_config(const char* text) { return validate_config(std::string(text)); }

/// The configuration with every default filled in; its digest identifies
/// the run in reports.
inline json canonical_config(const RunConfig& c) {
  json j;
  j["model"] = {{"n", c.n}, {"g", c.g}};
  j["grid"] = {{"t_end", c.grid.t_end},
               {"dt", c.grid.dt},
               {"window", c.window},
               {"refine", c.refine},
               {"record_every", c.record_every}};
  j["replicas"] = c.replicas;
  j["seed"] = c.base_seed;
  switch (c.init.kind) {
    case InitSpec::Kind::stationary:
      j["init"] = {{"kind", "stationary"}};
      break;
    case InitSpec::Kind::point:
      j["init"] = {{"kind", "point"}, {"v", c.init.v}, {"z", c.init.z}};
      break;
    case InitSpec::Kind::unranked:
      j["init"] = {{"kind", "unranked"}, {"v", c.init.v}, {"x", c.init.x}};
      break;
  }
  json out = {{"trajectory_csv", c.outputs.trajectory_csv},
              {"lln", c.outputs.lln},
              {"stationary", c.outputs.stationary},
              {"ordering", c.outputs.ordering}};
  if (c.outputs.hitting)
    out["hitting"] = {{"level", c.outputs.hitting->level}, {"t_max", c.outputs.hitting->t_max}};
  if (c.outputs.decay) out["decay"] = {{"slices", c.outputs.decay->slices}};
  j["outputs"] = out;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["thresholds"] = {{"lln_x_abs", c.thresholds.lln_x_abs},
                     {"lln_l1_abs", c.thresholds.lln_l1_abs},
                     {"lln_l_abs", c.thresholds.lln_l_abs},
                     {"ks_max", c.thresholds.ks_max},
                     {"ordering_min", c.thresholds.ordering_min},
                     {"hitting_r2_min", c.thresholds.hitting_r2_min}};
  return j;
}

/// FNV-1a over the canonical dump, as 16 hex digits.
inline std::string config_digest(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_config(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace atlas
