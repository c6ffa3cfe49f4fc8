#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zrlab {

// Batch-driver configuration. Grids left empty fall back to per-experiment
// defaults; explicitly empty lists in a config file are rejected.
struct ExperimentConfig {
  std::string experiment;
  std::string rate_spec;  // empty = the default rate battery
  std::vector<int> sites;
  std::vector<int> particles;
  std::vector<std::uint64_t> seeds{1};
  double tol = 1e-9;
  std::string out_dir = "out";
  int threads = 1;
  bool timings = false;   // real per-cell seconds in the CSV (off = 0, so
                          // report bodies stay byte-identical across reruns)
  double rho0 = 1.0;      // density-regime threshold
  double horizon = 0.0;   // simulated-time budget override
  int wavenumber = 1;
  int replicas = 8;
};

// key=value lines ('#' comments) or a flat JSON object with the same keys.
// Unknown keys raise UsageError.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);
void validate_config(const ExperimentConfig& cfg);

// Runs one experiment, writing reports and manifest.json under out_dir.
// Returns the process exit code: 0 clean, 1 scientific violation (with a
// witness dump), 2 usage error, 3 resource cap.
int run_experiment(const ExperimentConfig& config);

// Least-squares log-log slopes of 1/gap and the LSI estimate against L from
// an existing spectral table; writes scaling.csv and scaling_summary.txt.
// Needs at least 3 distinct L values in some series.
int emit_scaling_report(const std::string& spectral_csv_path,
                        const std::string& out_dir);

}  // namespace zrlab
