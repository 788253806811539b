// spinchain: run transport and gate experiments and write CSV.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "spinchain/experiments.hpp"

namespace {

using namespace spinchain;

enum Exit { kOk = 0, kConfig = 2, kCalibration = 3, kAbort = 4 };

struct Flags {
  std::string config;
  std::string gate;
  std::string noise;
  std::vector<double> gamma;
  std::string topology;
  std::string order;
  std::vector<int> n;
  std::vector<double> alpha;
  std::string grid;
  double dt = 0.0;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool force_large_n = false;
};

void add_flags(CLI::App& app, Flags& f, std::map<std::string, CLI::Option*>& opts) {
  opts["config"] = app.add_option("--config", f.config, "JSON config file");
  opts["gate"] = app.add_option("--gate", f.gate, "swap, cnot or cnot-rotated");
  opts["noise"] = app.add_option("--noise", f.noise, "none, dephasing or amp")
                      ->check(CLI::IsMember({"none", "dephasing", "amp"}));
  opts["gamma"] = app.add_option("--gamma", f.gamma, "noise rates in 1/tau0")->delimiter(',');
  opts["topology"] = app.add_option("--topology", f.topology, "1d or 2d")
                         ->check(CLI::IsMember({"1d", "2d"}));
  opts["order"] = app.add_option("--order", f.order, "cnot-first or cnot-last")
                      ->check(CLI::IsMember({"cnot-first", "cnot-last"}));
  opts["n"] = app.add_option("--n", f.n, "qubit counts")->delimiter(',');
  opts["alpha"] = app.add_option("--alpha", f.alpha, "durations T/tau0")->delimiter(',');
  opts["grid"] = app.add_option("--grid", f.grid, "theta x phi grid, e.g. 64x64");
  opts["dt"] = app.add_option("--dt", f.dt, "integrator step in tau0");
  opts["workers"] = app.add_option("--workers", f.workers, "worker threads (0: all cores)");
  opts["seed"] = app.add_option("--seed", f.seed, "calibration RNG seed");
  opts["out"] = app.add_option("--out", f.out, "output CSV path (default: stdout)");
  opts["force_large_n"] = app.add_flag("--force-large-n", f.force_large_n,
                                       "allow N > 14 chains");
}

ExperimentConfig build_config(ExperimentKind kind, const Flags& f,
                              const std::map<std::string, CLI::Option*>& opts) {
  auto given = [&](const char* k) { return opts.at(k)->count() > 0; };
  ExperimentConfig c;
  if (given("config")) c = load_config(f.config);
  c.experiment = kind;
  if (given("gate")) c.gates = {parse_gate(f.gate)};
  if (given("noise")) c.noise = parse_noise(f.noise);
  if (given("gamma")) c.gammas = f.gamma;
  if (given("topology")) c.topology = parse_topology(f.topology);
  if (given("order")) c.orders = {parse_order(f.order)};
  if (given("n")) c.n_values = f.n;
  if (given("alpha")) c.alphas = f.alpha;
  if (given("grid")) {
    std::size_t r = 0, k = 0;
    char x = 0, extra = 0;
    if (std::sscanf(f.grid.c_str(), "%zu%c%zu%c", &r, &x, &k, &extra) != 3 || x != 'x') {
      throw ConfigError("--grid expects RxC, got '" + f.grid + "'");
    }
    c.grid_rows = r;
    c.grid_cols = k;
  }
  if (given("dt")) c.dt = f.dt;
  if (given("workers")) c.workers = f.workers;
  if (given("seed")) c.seed = f.seed;
  if (given("out")) c.out = f.out;
  if (f.force_large_n) c.force_large_n = true;
  return resolve(c);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::string contour_path(const std::string& out) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + ".contour.csv")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-chain gate and transport simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  std::map<std::string, CLI::Option*> opts;
  add_flags(app, flags, opts);
  const std::pair<const char*, ExperimentKind> subs[] = {
      {"calibrate", ExperimentKind::calibrate},
      {"trace", ExperimentKind::trace},
      {"duration-sweep", ExperimentKind::duration_sweep},
      {"chain-sweep", ExperimentKind::chain_sweep},
      {"state-map", ExperimentKind::state_map}};
  for (const auto& [name, kind] : subs) app.add_subcommand(name, "run " + std::string(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  ExperimentKind kind = ExperimentKind::trace;
  for (const auto& [name, k] : subs)
    if (app.got_subcommand(name)) kind = k;

  try {
    const auto cfg = build_config(kind, flags, opts);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_experiment(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(cfg.out, render_csv(result.table, cfg, result.comments, wall));
    if (result.contour) {
      const std::string path = cfg.out.empty() ? std::string{} : contour_path(cfg.out);
      write_text(path, render_csv(*result.contour, cfg, result.comments, wall));
    }
    if (result.calibration_failed) {
      std::cerr << "calibration did not reach the target objective\n";
      return kCalibration;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IntegratorAbort& e) {
    std::cerr << "integrator abort: " << e.what() << '\n';
    return kAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
