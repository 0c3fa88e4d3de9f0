// Command-line front end. Exit status: 0 when every requested check passes,
// 1 when a check fails, 2 on usage or configuration errors, 3 on I/O or
// numerical failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "atlas/run.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::filesystem::filesystem_error("cannot open config", path,
                                                   std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void emit(const atlas::json& report, const std::string& out_dir) {
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "report.json", std::ios::binary);
    if (!os) throw std::filesystem::filesystem_error("cannot write report.json", out_dir,
                                                     std::make_error_code(std::errc::io_error));
    os << report.dump(2) << "\n";
  }
  std::cout << report.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inert drift Atlas model: simulation and validation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  unsigned jobs = atlas::default_jobs();
  std::optional<std::uint64_t> seed;
  std::size_t n = 3, probes = 100, steps = 100, trials = 100;
  double g = 1.0;

  for (const char* name : {"simulate", "lln", "ordering", "hitting", "decay"}) {
    auto* sub = app.add_subcommand(name, std::string("run the '") + name + "' pipeline from a config");
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", seed, "override the base seed");
  }
  auto* sc = app.add_subcommand("stationary-check", "residuals of the stationary equations");
  sc->add_option("--n", n, "particle count")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--g", g, "gravitation constant")->capture_default_str();
  sc->add_option("--probes", probes, "probe points per face")->capture_default_str();
  sc->add_option("--seed", seed, "probe seed");
  sc->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* sk = app.add_subcommand("skorokhod-test", "Skorokhod solver against the enumeration oracle");
  sk->add_option("--n", n, "dimension")->check(CLI::Range(1, 12))->capture_default_str();
  sk->add_option("--steps", steps, "steps per path")->capture_default_str();
  sk->add_option("--trials", trials, "random paths")->capture_default_str();
  sk->add_option("--seed", seed, "path seed");
  sk->add_option("--out", out_dir, "output directory")->capture_default_str();
  sk->add_option("--jobs", jobs, "ignored; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "stationary-check") {
      const auto r = atlas::stationary_check_report(n, g, seed.value_or(0), probes);
      emit(r, out_dir);
      return r.at("pass").get<bool>() ? 0 : 1;
    }
    if (cmd == "skorokhod-test") {
      const auto r = atlas::skorokhod_test_report(n, steps, trials, seed.value_or(0));
      emit(r, out_dir);
      return r.at("pass").get<bool>() ? 0 : 1;
    }
    auto cfg = atlas::validate_config(read_file(config_path));
    if (seed) cfg.base_seed = *seed;
    const auto out = atlas::run(cfg, atlas::parse_command(cmd), jobs, out_dir);
    std::cout << out.report.dump(2) << "\n";
    for (const auto& f : out.failures) std::cerr << "FAIL " << f << "\n";
    return out.pass ? 0 : 1;
  } catch (const atlas::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
