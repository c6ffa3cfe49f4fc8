// Command line front end. Every subcommand funnels into run_experiment so
// the CLI stays a thin argument-translation layer.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zrlab/errors.hpp"
#include "zrlab/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string rate;
  std::string sites;
  std::string particles;
  std::string seeds;
  std::string out;
  double tol = 1e-9;
  double rho0 = 1.0;
  double horizon = 0.0;
  int threads = 1;
  int wavenumber = 1;
  int replicas = 8;
  bool timings = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zrlab: numerical laboratory for zero-range particle dynamics"};
  app.set_version_flag("--version", "zrlab 0.1.0");
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"measures", "stationary measures, defects, and density scans"},
      {"gap", "spectral gap tables over (rate, L, N) grids"},
      {"lsi", "log-Sobolev constant tables over (rate, L, N) grids"},
      {"decomposition", "two-block identities and diagnostics"},
      {"ensembles", "product-measure bounds, limit laws, ensemble ratios"},
      {"simulate", "kinetic Monte Carlo trajectories"},
      {"verify-all", "run every battery and collect violations"},
      {"report", "fit scaling exponents from an existing spectral.csv"},
  };

  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> subapps;
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    Flags& f = flags[name];
    sub->add_option("--config", f.config,
                    "config file (key=value lines or a JSON object); "
                    "explicit flags override it");
    sub->add_option("--rate", f.rate,
                    "rate spec: linear[:lambda], constant, staircase[:step], "
                    "table:path (default: linear and staircase:2)");
    sub->add_option("--L", f.sites, "comma separated segment lengths");
    sub->add_option("--N", f.particles, "comma separated particle counts");
    sub->add_option("--seed", f.seeds, "comma separated seeds");
    sub->add_option("--threads", f.threads, "worker threads for restarts");
    sub->add_option("--out", f.out, "output directory (default: out)");
    sub->add_option("--tol", f.tol, "identity tolerance (default: 1e-9)");
    sub->add_option("--rho0", f.rho0, "reference density for regime scans");
    sub->add_option("--horizon", f.horizon, "simulation time horizon");
    sub->add_option("--wavenumber", f.wavenumber, "slow mode wavenumber");
    sub->add_option("--replicas", f.replicas, "independent replicas");
    sub->add_flag("--timings", f.timings, "record wall times in tables");
    subapps[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const Flags& f = flags[name];

  zrlab::ExperimentConfig cfg;
  try {
    if (sub->count("--config")) cfg = zrlab::parse_config_file(f.config);
    cfg.experiment = name;
    if (sub->count("--rate")) cfg.rate_spec = f.rate;
    if (sub->count("--L")) zrlab::apply_config_entry(cfg, "L", f.sites);
    if (sub->count("--N")) zrlab::apply_config_entry(cfg, "N", f.particles);
    if (sub->count("--seed")) zrlab::apply_config_entry(cfg, "seed", f.seeds);
    if (sub->count("--threads")) cfg.threads = f.threads;
    if (sub->count("--out")) cfg.out_dir = f.out;
    if (sub->count("--tol")) cfg.tol = f.tol;
    if (sub->count("--rho0")) cfg.rho0 = f.rho0;
    if (sub->count("--horizon")) cfg.horizon = f.horizon;
    if (sub->count("--wavenumber")) cfg.wavenumber = f.wavenumber;
    if (sub->count("--replicas")) cfg.replicas = f.replicas;
    if (sub->count("--timings")) cfg.timings = f.timings;
  } catch (const zrlab::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }
  return zrlab::run_experiment(cfg);
}
