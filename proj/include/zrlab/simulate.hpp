#pragma once

#include <cstdint>
#include <vector>

#include "zrlab/lattice.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/rng.hpp"

namespace zrlab {

// Event-driven state of the conserved dynamics.  A site with occupancy n
// fires at rate degree(x) * c(n); the jump target is a uniform neighbour.
// Per-site rates live in a binary-indexed tree for O(log V) selection and
// update; the tree is rebuilt periodically and the worst incremental drift
// is tracked.
class SimState {
 public:
  SimState(const Box& box, const RateFunction& rate, std::vector<int> occupancy,
           std::uint64_t seed, std::uint64_t stream = 0);

  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  int particles() const { return particles_; }
  const std::vector<int>& occupancy() const { return eta_; }
  double total_rate() const;
  double max_rate_drift() const { return max_drift_; }
  // Endpoints of the most recent jump (-1 before any event).
  int last_from() const { return last_from_; }
  int last_to() const { return last_to_; }

  // Performs one jump and returns the waiting time consumed.  Throws when no
  // particle can move.
  double step();

 private:
  void refresh_tree();
  void tree_add(int site, double delta);
  int tree_search(double u) const;
  double site_rate(int site) const;

  const Box* box_;
  const RateFunction* rate_;
  std::vector<int> eta_;
  std::vector<double> tree_;
  double tree_total_ = 0.0;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  int particles_ = 0;
  double max_drift_ = 0.0;
  int rebuild_every_ = 100000;
  int last_from_ = -1;
  int last_to_ = -1;
  RngStream rng_;
};

struct KmcSample {
  double time = 0.0;
  double slow_mode = 0.0;  // density wave tracking the slowest relaxation
  double total_rate = 0.0;
  double rate_sum = 0.0;   // sum of c(eta_x), an energy-like total
};

struct KmcOptions {
  double horizon = 0.0;
  double sample_interval = 0.0;  // <= 0 picks 0.1 / (single-particle gap)
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t max_events = 200'000'000;
  int wavenumber = 1;  // density wave recorded in the samples
};

struct KmcSummary {
  std::uint64_t events = 0;
  double final_time = 0.0;
  int particles = 0;
  double max_rate_drift = 0.0;
  bool truncated = false;  // stopped at the event cap before the horizon
  std::vector<KmcSample> samples;
  std::vector<int> final_occupancy;
};

KmcSummary kmc_run(const Box& box, const RateFunction& rate,
                   const std::vector<int>& initial, const KmcOptions& options);

struct LawCheckResult {
  double tv = 0.0;          // time-averaged empirical law vs exact one
  double tolerance = 0.0;   // effective-sample-size scale for the TV
  double measured_time = 0.0;
  std::uint64_t events = 0;
  bool under_sampled = false;
};

// Compares the trajectory's time-in-state distribution on an enumerable
// sector against the exact stationary law.
LawCheckResult empirical_law_check(const Box& box, const RateFunction& rate,
                                   int particles, double horizon,
                                   std::uint64_t seed);

struct RelaxationResult {
  double tau = 0.0;       // integrated autocorrelation time of the slow mode
  double ci_low = 0.0;    // replica-spread confidence interval
  double ci_high = 0.0;
  bool unconverged = false;
  double gap_reference = 0.0;  // single-particle value 2(1 - cos(pi k / L))
  std::vector<double> per_replica;
};

// Estimates the relaxation time of density wave k on a segment from replica
// trajectories started in a spread-out configuration; replicas >= 8.
RelaxationResult relaxation_estimate(const Box& box, const RateFunction& rate,
                                     int particles, int wavenumber,
                                     double horizon, std::uint64_t seed,
                                     int replicas);

}  // namespace zrlab
