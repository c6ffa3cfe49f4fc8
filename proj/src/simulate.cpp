#include "zrlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "zrlab/errors.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/spectral.hpp"

namespace zrlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Density-wave profile that diagonalizes the single-particle walk on a
// segment (Neumann eigenvector, half-site phase).
double wave(int coord, int extent, int wavenumber) {
  return std::cos(kPi * wavenumber * (coord + 0.5) / extent);
}

}  // namespace

SimState::SimState(const Box& box, const RateFunction& rate,
                   std::vector<int> occupancy, std::uint64_t seed,
                   std::uint64_t stream)
    : box_(&box), rate_(&rate), eta_(std::move(occupancy)), rng_(seed, stream) {
  if (static_cast<int>(eta_.size()) != box.size())
    throw DomainError("occupancy length does not match the box");
  for (int n : eta_) {
    if (n < 0) throw DomainError("negative occupancy");
    particles_ += n;
  }
  rate.at(particles_);  // fail fast if the table cannot cover a pile-up
  tree_.assign(static_cast<std::size_t>(box.size()) + 1, 0.0);
  refresh_tree();
  max_drift_ = 0.0;
}

double SimState::site_rate(int site) const {
  return box_->degree(site) *
         rate_->at(eta_[static_cast<std::size_t>(site)]);
}

double SimState::total_rate() const { return tree_total_; }

void SimState::refresh_tree() {
  long double exact = 0.0L;
  std::size_t n = eta_.size();
  std::fill(tree_.begin(), tree_.end(), 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    double r = site_rate(static_cast<int>(x));
    exact += r;
    std::size_t i = x + 1;
    while (i <= n) {
      tree_[i] += r;
      i += i & (~i + 1);
    }
  }
  double fresh = static_cast<double>(exact);
  double drift = std::abs(tree_total_ - fresh) / std::max(1.0, fresh);
  if (events_ > 0) max_drift_ = std::max(max_drift_, drift);
  tree_total_ = fresh;
}

void SimState::tree_add(int site, double delta) {
  std::size_t i = static_cast<std::size_t>(site) + 1;
  while (i < tree_.size()) {
    tree_[i] += delta;
    i += i & (~i + 1);
  }
  tree_total_ += delta;
}

int SimState::tree_search(double u) const {
  std::size_t n = eta_.size();
  std::size_t mask = 1;
  while ((mask << 1) <= n) mask <<= 1;
  std::size_t pos = 0;
  double rem = u;
  for (std::size_t step = mask; step > 0; step >>= 1) {
    std::size_t next = pos + step;
    if (next <= n && tree_[next] < rem) {
      pos = next;
      rem -= tree_[next];
    }
  }
  int site = static_cast<int>(std::min(pos, n - 1));
  // Roundoff can land on an empty site at the very top of the range; walk
  // back to the nearest active one so the move stays legal.
  while (site > 0 && eta_[static_cast<std::size_t>(site)] == 0) --site;
  while (site < static_cast<int>(n) - 1 &&
         eta_[static_cast<std::size_t>(site)] == 0)
    ++site;
  return site;
}

double SimState::step() {
  if (particles_ == 0) throw DomainError("no particles to move");
  if (!(tree_total_ > 0.0))
    throw ViolationError("total jump rate vanished with particles present",
                         "{\"particles\": " + std::to_string(particles_) + "}");
  double dt = rng_.next_exponential() / tree_total_;
  double u = rng_.next_unit() * tree_total_;
  int x = tree_search(u);
  const auto& nb = box_->neighbors(x);
  int y = nb[rng_.next_below(nb.size())];

  double rx = site_rate(x), ry = site_rate(y);
  --eta_[static_cast<std::size_t>(x)];
  ++eta_[static_cast<std::size_t>(y)];
  tree_add(x, site_rate(x) - rx);
  tree_add(y, site_rate(y) - ry);
  last_from_ = x;
  last_to_ = y;

  time_ += dt;
  ++events_;
  if (rebuild_every_ > 0 &&
      events_ % static_cast<std::uint64_t>(rebuild_every_) == 0)
    refresh_tree();
  return dt;
}

KmcSummary kmc_run(const Box& box, const RateFunction& rate,
                   const std::vector<int>& initial, const KmcOptions& options) {
  if (!(options.horizon > 0.0)) throw DomainError("horizon must be positive");
  SimState st(box, rate, initial, options.seed, options.stream);

  KmcSummary out;
  out.particles = st.particles();
  int n_sites = box.size();
  int extent = 0;
  for (int x = 0; x < n_sites; ++x)
    extent = std::max(extent, box.coords(x)[0] + 1);
  int k = std::max(1, options.wavenumber);
  std::vector<double> phi(static_cast<std::size_t>(n_sites));
  for (int x = 0; x < n_sites; ++x)
    phi[static_cast<std::size_t>(x)] = wave(box.coords(x)[0], extent, k);

  double gap1 = 2.0 * (1.0 - std::cos(kPi * k / extent));
  double cadence =
      options.sample_interval > 0.0 ? options.sample_interval : 0.1 / gap1;

  auto exact_mode = [&]() {
    long double m = 0.0L;
    for (int x = 0; x < n_sites; ++x)
      m += static_cast<long double>(st.occupancy()[static_cast<std::size_t>(x)]) *
           phi[static_cast<std::size_t>(x)];
    return static_cast<double>(m);
  };
  auto exact_rate_sum = [&]() {
    long double s = 0.0L;
    for (int x = 0; x < n_sites; ++x)
      s += rate.at(st.occupancy()[static_cast<std::size_t>(x)]);
    return static_cast<double>(s);
  };

  double mode_val = exact_mode();
  double rate_sum = exact_rate_sum();
  out.samples.push_back({0.0, mode_val, st.total_rate(), rate_sum});

  if (st.particles() == 0) {
    out.final_time = 0.0;
    out.final_occupancy = st.occupancy();
    return out;
  }

  double next_sample = cadence;
  while (st.time() < options.horizon) {
    if (st.events() >= options.max_events) {
      out.truncated = true;
      break;
    }
    double mode_before = mode_val;
    double rate_before = st.total_rate();
    double rate_sum_before = rate_sum;
    st.step();
    // The pre-step state occupies the interval the step just closed.
    while (next_sample <= st.time() && next_sample <= options.horizon) {
      out.samples.push_back(
          {next_sample, mode_before, rate_before, rate_sum_before});
      next_sample += cadence;
    }
    const auto& eta = st.occupancy();
    int sx = st.last_from();
    int sy = st.last_to();
    mode_val += phi[static_cast<std::size_t>(sy)] - phi[static_cast<std::size_t>(sx)];
    int ex = eta[static_cast<std::size_t>(sx)];
    int ey = eta[static_cast<std::size_t>(sy)];
    rate_sum += rate.at(ex) - rate.at(ex + 1) + rate.at(ey) - rate.at(ey - 1);
    if (st.events() % 100000 == 0) {
      mode_val = exact_mode();
      rate_sum = exact_rate_sum();
    }
  }

  out.events = st.events();
  out.final_time = st.time();
  out.max_rate_drift = st.max_rate_drift();
  out.final_occupancy = st.occupancy();
  return out;
}

LawCheckResult empirical_law_check(const Box& box, const RateFunction& rate,
                                   int particles, double horizon,
                                   std::uint64_t seed) {
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (particles < 0) throw DomainError("negative particle count");
  if (particles == 0) return {0.0, 0.0, horizon, 0, false};

  Sector sector(box, particles);
  DiscreteMeasure nu = canonical_measure(sector, rate);
  SparseGenerator gen = assemble_generator(sector, rate);
  double gap = spectral_gap(gen, nu).gap;

  std::vector<int> initial(static_cast<std::size_t>(box.size()), 0);
  for (int p = 0; p < particles; ++p)
    ++initial[static_cast<std::size_t>(p % box.size())];

  SimState st(box, rate, std::move(initial), seed, 0);
  double burn_end = 0.1 * horizon;
  std::vector<double> occupation(sector.size(), 0.0);
  while (st.time() < horizon) {
    double t0 = st.time();
    std::uint64_t r = sector.rank(st.occupancy());
    st.step();
    double t1 = std::min(st.time(), horizon);
    double lo = std::max(t0, burn_end);
    if (t1 > lo) occupation[r] += t1 - lo;
    if (st.events() >= 500'000'000ULL) break;
  }

  LawCheckResult out;
  out.events = st.events();
  long double measured = 0.0L;
  for (double w : occupation) measured += w;
  out.measured_time = static_cast<double>(measured);

  if (!(out.measured_time > 0.0)) {
    out.tv = 1.0;
    out.tolerance = 1.0;
    out.under_sampled = true;
    return out;
  }
  long double tv = 0.0L;
  long double tol = 0.0L;
  double ess_scale = 2.0 / (out.measured_time * gap);
  for (std::uint64_t s = 0; s < sector.size(); ++s) {
    double p_exact = nu.prob(s);
    tv += std::abs(occupation[s] / out.measured_time - p_exact);
    tol += std::sqrt(std::max(0.0, p_exact * (1.0 - p_exact) * ess_scale));
  }
  out.tv = 0.5 * static_cast<double>(tv);
  out.tolerance = std::min(1.0, 0.5 * static_cast<double>(tol));
  out.under_sampled = out.measured_time * gap < 100.0;
  return out;
}

namespace {

// Integrated autocorrelation time of an equally spaced series, windowed at
// the smallest lag W with W >= 5 tau(W). `converged` reports whether the
// window closed before the lag cap.
double integrated_tau(const std::vector<double>& a, double dt, bool& converged) {
  converged = false;
  std::size_t n = a.size();
  if (n < 8) return 0.5 * dt;
  long double mean = 0.0L;
  for (double x : a) mean += x;
  mean /= static_cast<long double>(n);
  long double c0 = 0.0L;
  for (double x : a) {
    long double d = x - mean;
    c0 += d * d;
  }
  c0 /= static_cast<long double>(n);
  if (!(c0 > 0.0L)) {
    converged = true;  // constant series: nothing left to relax
    return 0.5 * dt;
  }
  double tau = 0.5;
  double rho_sum = 0.0;
  std::size_t max_lag = n / 4;
  for (std::size_t j = 1; j <= max_lag; ++j) {
    long double cj = 0.0L;
    for (std::size_t i = 0; i + j < n; ++i)
      cj += (a[i] - static_cast<double>(mean)) *
            (a[i + j] - static_cast<double>(mean));
    cj /= static_cast<long double>(n - j);
    rho_sum += static_cast<double>(cj / c0);
    tau = 0.5 + rho_sum;
    if (static_cast<double>(j) >= 5.0 * tau) {
      converged = true;
      break;
    }
  }
  return std::max(tau, 0.5) * dt;
}

}  // namespace

RelaxationResult relaxation_estimate(const Box& box, const RateFunction& rate,
                                     int particles, int wavenumber,
                                     double horizon, std::uint64_t seed,
                                     int replicas) {
  if (particles <= 0) throw DomainError("no dynamics without particles");
  if (replicas < 8) throw DomainError("relaxation estimate needs >= 8 replicas");
  if (box.dimension() != 1)
    throw DomainError("density-wave relaxation is defined on segments");
  int n_sites = box.size();
  if (wavenumber < 1 || wavenumber >= n_sites)
    throw DomainError("wavenumber outside (0, sites)");

  RelaxationResult out;
  out.gap_reference = 2.0 * (1.0 - std::cos(kPi * wavenumber / n_sites));
  double cadence = 0.1 / out.gap_reference;

  std::vector<int> initial(static_cast<std::size_t>(n_sites), 0);
  for (int p = 0; p < particles; ++p)
    ++initial[static_cast<std::size_t>(p % n_sites)];

  out.per_replica.reserve(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    KmcOptions o;
    o.horizon = horizon;
    o.sample_interval = cadence;
    o.seed = seed;
    o.stream = static_cast<std::uint64_t>(r) + 1;
    o.wavenumber = wavenumber;
    KmcSummary run = kmc_run(box, rate, initial, o);
    std::size_t burn = run.samples.size() / 5;
    std::vector<double> series;
    series.reserve(run.samples.size() - burn);
    for (std::size_t i = burn; i < run.samples.size(); ++i)
      series.push_back(run.samples[i].slow_mode);
    bool converged = false;
    out.per_replica.push_back(integrated_tau(series, cadence, converged));
    if (!converged || run.truncated) out.unconverged = true;
  }

  long double mean = 0.0L;
  for (double t : out.per_replica) mean += t;
  mean /= static_cast<long double>(replicas);
  long double var = 0.0L;
  for (double t : out.per_replica) {
    long double d = t - mean;
    var += d * d;
  }
  var /= static_cast<long double>(replicas - 1);
  double stderr_tau =
      std::sqrt(static_cast<double>(var) / static_cast<double>(replicas));
  out.tau = static_cast<double>(mean);
  out.ci_low = out.tau - 2.0 * stderr_tau;
  out.ci_high = out.tau + 2.0 * stderr_tau;
  return out;
}

}  // namespace zrlab
