#include "flexbc/config.hpp"
#include "flexbc/harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace flexbc;

namespace {

constexpr int kOk = 0;
constexpr int kSolverFailure = 1;
constexpr int kConfigError = 2;

struct CommonOpts {
  std::string out = "out";
  std::string cache_dir;
  int verbosity = 0;
  bool quiet = false;
};

void setup_logging(const CommonOpts& c) {
  auto logger = spdlog::stderr_color_mt("flexbc");
  spdlog::set_default_logger(logger);
  if (c.quiet)
    spdlog::set_level(spdlog::level::warn);
  else if (c.verbosity >= 2)
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string history_text(const ConvergenceReport& r) {
  std::ostringstream os;
  write_history_csv(os, r);
  return os.str();
}

std::string curve_text(const std::vector<ScanPoint>& pts) {
  std::ostringstream os;
  write_curve_csv(os, pts);
  return os.str();
}

void persist(const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "summary.json", result_json(r));
  if (!r.runs.empty()) write_file(dir / "history.csv", history_text(r.runs.front().report));
  for (const auto& v : r.runs) {
    fs::create_directories(dir / v.name);
    write_file(dir / v.name / "history.csv", history_text(v.report));
    write_file(dir / v.name / "summary.json", summary_json(v.report));
  }
  if (!r.curve.empty()) write_file(dir / "curve.csv", curve_text(r.curve));
}

int cmd_run(const CommonOpts& c, const std::string& config, const std::string& only, bool dump_lattice) {
  auto specs = load_config(config);
  bool any = false, all_ok = true;
  for (auto& s : specs) {
    if (!only.empty() && s.name != only) continue;
    any = true;
    if (!c.cache_dir.empty()) s.gf.cache_dir = c.cache_dir;
    const fs::path dir = fs::path(c.out) / s.name;
    fs::create_directories(dir);
    if (dump_lattice && s.kind != ExperimentKind::fig5) {
      std::ostringstream os;
      experiment_domain(s, s.kind == ExperimentKind::microcrack).write_csv(os);
      write_file(dir / "lattice.csv", os.str());
    }
    spdlog::info("running {} ({})", s.name, to_string(s.kind));
    const auto r = run_experiment(s);
    persist(r, dir);
    for (const auto& v : r.runs) {
      std::printf("%s/%s: %s N_iter=%d N_force=%ld rate=%s\n", s.name.c_str(), v.name.c_str(),
                  v.report.status.c_str(), v.report.n_iter, v.report.n_force,
                  v.report.fit.fitted ? std::to_string(v.report.fit.rate).c_str() : "unfitted");
    }
    if (std::isfinite(r.sigma)) std::printf("%s: sigma=%.6f sigma_opt=%.6f\n", s.name.c_str(), r.sigma, r.sigma_opt);
    if (!r.ok()) all_ok = false;
  }
  if (!any) throw ConfigError("no experiment named '" + only + "'");
  return all_ok ? kOk : kSolverFailure;
}

int cmd_scan(const CommonOpts& c, const std::string& suite, const std::string& config, int M, int points) {
  std::vector<ExperimentSpec> specs;
  if (!config.empty()) {
    for (auto& s : load_config(config))
      if (s.kind == ExperimentKind::fig5) specs.push_back(std::move(s));
    if (specs.empty()) throw ConfigError("config has no fig5 experiments");
  } else {
    if (suite != "stab1d") throw ConfigError("unknown suite '" + suite + "'");
    ExperimentSpec s = default_spec(ExperimentKind::fig5);
    s.name = "stab1d";
    s.scan_M = M;
    s.scan_points = points;
    if (M < 1 || points < 1) throw ConfigError("--M and --points must be positive");
    specs.push_back(s);
  }
  for (const auto& s : specs) {
    const auto r = run_fig5_scan(s);
    const fs::path dir = fs::path(c.out) / s.name;
    persist(r, dir);
    std::printf("%s: %zu points -> %s\n", s.name.c_str(), r.curve.size(), (dir / "curve.csv").c_str());
  }
  return kOk;
}

int cmd_gf_build(const CommonOpts& c, double rmax, int grid) {
  if (!(rmax > 0) || grid < 8) throw ConfigError("--rmax must be positive and --grid at least 8");
  const ExperimentSpec s = default_spec(ExperimentKind::point_force);
  const double ell = morse_equilibrium_spacing(s.morse, s.shells);
  const auto basis = BravaisBasis::hexagonal(ell);
  const auto h = build_harmonic_stencil(AtomisticModel::morse2d(s.morse, basis, s.shells));
  GreenBuildOptions o;
  o.grid = grid;
  o.cache_dir = c.cache_dir;
  const auto g = gf_2d_table(h, basis, rmax * ell, o);
  const double res = green_identity_residual(g, h, basis, 10, s.seed);
  std::printf("green table: r_max=%g ell, grid=%d, extent=%d, cache=%s\n", rmax, g.grid(), g.extent(),
              green_cache_dir(o).c_str());
  std::printf("identity residual: %.3e\n", res);
  return res < 1e-8 ? kOk : kSolverFailure;
}

int cmd_verify(const std::string& suite) {
  if (suite != "stab1d") throw ConfigError("unknown suite '" + suite + "'");
  bool ok = true;
  for (const auto& rep : run_stab1d_suite()) {
    for (const auto& it : rep.items) {
      std::printf("%s M=%d k2=%g %s: %.6g (limit %.6g)%s\n", it.passed ? "PASS" : "FAIL", rep.M, rep.k2,
                  it.name.c_str(), it.value, it.limit, it.gating ? "" : " [info]");
      if (!it.passed && it.gating) ok = false;
    }
  }
  // Stability over the whole admissible interval.
  for (int M : {2, 5, 10, 25}) {
    const auto pts = stab1d_scan(M, 1.0, open_grid(-0.2499, 0.0, 200));
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, p.sigma);
    const bool pass = worst < 1.0;
    std::printf("%s M=%d max sigma over (-0.2499, 0): %.6f\n", pass ? "PASS" : "FAIL", M, worst);
    ok = ok && pass;
  }
  std::printf("%s\n", ok ? "all checks passed" : "some checks failed");
  return ok ? kOk : kSolverFailure;
}

int cmd_report(const CommonOpts& c) {
  if (!fs::is_directory(c.out)) throw ConfigError("no output directory '" + c.out + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(c.out))
    if (e.is_directory() && fs::exists(e.path() / "summary.json")) files.push_back(e.path() / "summary.json");
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no summary.json files under '" + c.out + "'");
  std::printf("%-16s %-12s %5s %8s %8s %10s  %s\n", "experiment", "kind", "#a", "sigma", "s_opt", "|dE|",
              "variants (N_iter/N_force/rate)");
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = nlohmann::json::parse(in);
    auto num = [&](const char* k) {
      return j.contains(k) && j[k].is_number() ? j[k].get<double>() : std::nan("");
    };
    std::string variants;
    if (j.contains("variants"))
      for (auto it = j["variants"].begin(); it != j["variants"].end(); ++it) {
        const auto& v = it.value();
        std::string rate = v["fitted_rate"].is_number() ? std::to_string(v["fitted_rate"].get<double>()) : "unfitted";
        variants += it.key() + "=" + std::to_string(v["N_iter"].get<int>()) + "/" +
                    std::to_string(v["N_force"].get<long>()) + "/" + rate + " ";
      }
    std::printf("%-16s %-12s %5d %8.4f %8.4f %10.3e  %s\n", j.value("name", "?").c_str(),
                j.value("kind", "?").c_str(), j.value("n_atomistic", 0), num("sigma"), num("sigma_opt"),
                num("energy_error"), variants.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flexible boundary conditions for bounded atomistic domains"};
  app.require_subcommand(1);
  CommonOpts c;
  app.add_option("-o,--out", c.out, "Output directory");
  app.add_option("--cache-dir", c.cache_dir, "Green table cache directory (default: $FLEXBC_GREEN_CACHE)");
  app.add_flag("-v,--verbose", c.verbosity, "More log output");
  app.add_flag("-q,--quiet", c.quiet, "Warnings and errors only");

  std::string config, only, suite = "stab1d";
  bool dump_lattice = false;
  int M = 10, points = 200, grid = 512;
  double rmax = 120.0;

  auto* run = app.add_subcommand("run", "Run the experiments of a config file");
  run->add_option("--config", config, "Experiment file")->required();
  run->add_option("--only", only, "Run only this experiment");
  run->add_flag("--dump-lattice", dump_lattice, "Write lattice.csv with the index sets");

  auto* scan = app.add_subcommand("scan", "Spectral radius scan of the 1D chain");
  scan->add_option("--suite", suite, "Scan suite (stab1d)");
  scan->add_option("--config", config, "Experiment file with fig5 experiments");
  scan->add_option("--M", M, "Atomistic half width");
  scan->add_option("--points", points, "Number of grid points");

  auto* gf = app.add_subcommand("gf-build", "Build and cache the 2D lattice Green function");
  gf->add_option("--rmax", rmax, "Largest separation in lattice constants");
  gf->add_option("--grid", grid, "Brillouin-zone grid per direction");

  auto* verify = app.add_subcommand("verify", "Check the 1D stability theory");
  verify->add_option("--suite", suite, "Verification suite (stab1d)");

  auto* report = app.add_subcommand("report", "Tabulate summaries under the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    setup_logging(c);
    if (!c.cache_dir.empty()) fs::create_directories(c.cache_dir);
    if (*run) return cmd_run(c, config, only, dump_lattice);
    if (*scan) return cmd_scan(c, suite, config, M, points);
    if (*gf) return cmd_gf_build(c, rmax, grid);
    if (*verify) return cmd_verify(suite);
    if (*report) return cmd_report(c);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    spdlog::error("invalid setup: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kSolverFailure;
  }
  std::cerr << app.help();
  return kConfigError;
}
