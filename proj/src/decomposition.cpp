#include "zrlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "zrlab/errors.hpp"
#include "zrlab/logsum.hpp"

namespace zrlab {

namespace {

// log Z_m(k) for k = 0..total: m-site partition sums, by binary doubling of
// the single-site weight vector 1/c(k)!.
std::vector<double> log_partition_sums(int sites, int total, const RateFunction& rate) {
  if (rate.n_max() < total)
    throw TableError("rate table too short for partition sums: need c up to n=" +
                     std::to_string(total));
  std::vector<double> lw(static_cast<std::size_t>(total) + 1);
  for (int k = 0; k <= total; ++k) lw[static_cast<std::size_t>(k)] = -rate.log_factorial(k);
  ScaledVec site = scaled_from_log(lw);
  ScaledVec z = convolve_power(site, static_cast<unsigned>(sites), static_cast<std::size_t>(total));
  std::vector<double> out(static_cast<std::size_t>(total) + 1, kNegInf);
  for (int k = 0; k <= total; ++k) out[static_cast<std::size_t>(k)] = z.log_at(static_cast<std::size_t>(k));
  return out;
}

}  // namespace

DiscreteMeasure gamma_distribution(int sites1, int sites2, int total, const RateFunction& rate) {
  if (sites1 < 1 || sites2 < 1) throw DomainError("both blocks need at least one site");
  if (total < 0) throw DomainError("particle number must be >= 0");
  std::vector<double> z1 = log_partition_sums(sites1, total, rate);
  std::vector<double> z2 = log_partition_sums(sites2, total, rate);
  std::vector<double> lw(static_cast<std::size_t>(total) + 1);
  for (int n = 0; n <= total; ++n)
    lw[static_cast<std::size_t>(n)] =
        z1[static_cast<std::size_t>(n)] + z2[static_cast<std::size_t>(total - n)];
  return DiscreteMeasure::from_log_weights(std::move(lw));
}

double BirthDeathChain::dirichlet(std::span<const double> f) const {
  if (f.size() != pmf.size()) throw DomainError("function length does not match the chain");
  long double acc = 0.0L;
  for (std::size_t n = 1; n < pmf.size(); ++n) {
    long double d = f[n] - f[n - 1];
    acc += (long double)std::min(pmf[n], pmf[n - 1]) * d * d;
  }
  return (double)acc;
}

EdgeForm BirthDeathChain::edge_form() const {
  EdgeForm form;
  form.n = pmf.size();
  for (std::size_t n = 1; n < pmf.size(); ++n) {
    form.i.push_back(static_cast<std::uint32_t>(n - 1));
    form.j.push_back(static_cast<std::uint32_t>(n));
    form.w.push_back(std::min(pmf[n], pmf[n - 1]));
  }
  return form;
}

DiscreteMeasure BirthDeathChain::measure() const { return DiscreteMeasure::from_weights(pmf); }

BirthDeathChain birth_death_generator(const DiscreteMeasure& pmf_in) {
  std::size_t n_states = pmf_in.size();
  if (n_states < 1) throw DomainError("empty input: chain needs at least one state");
  BirthDeathChain chain;
  chain.pmf = pmf_in.probs();
  // Support must be an interval, otherwise the Metropolis chain disconnects.
  std::size_t lo = 0, hi = n_states;
  while (lo < n_states && chain.pmf[lo] == 0.0) ++lo;
  while (hi > lo && chain.pmf[hi - 1] == 0.0) --hi;
  for (std::size_t k = lo; k < hi; ++k)
    if (chain.pmf[k] == 0.0)
      throw DomainError("disconnected support: pmf vanishes at interior state " +
                        std::to_string(k));
  chain.up.assign(n_states, 0.0);
  chain.down.assign(n_states, 0.0);
  for (std::size_t k = 0; k + 1 < n_states; ++k) {
    if (chain.pmf[k] > 0.0 && chain.pmf[k + 1] > 0.0)
      chain.up[k] = std::min(chain.pmf[k + 1] / chain.pmf[k], 1.0);
  }
  for (std::size_t k = 1; k < n_states; ++k) {
    if (chain.pmf[k] > 0.0 && chain.pmf[k - 1] > 0.0)
      chain.down[k] = std::min(chain.pmf[k - 1] / chain.pmf[k], 1.0);
  }
  return chain;
}

HardyBracket hardy_lsi_bound(const BirthDeathChain& chain, double bracket_factor) {
  if (!(bracket_factor >= 1.0)) throw DomainError("bracket factor must be >= 1");
  const auto& p = chain.pmf;
  int n = chain.states();
  // Restrict to the support interval.
  int lo = 0, hi = n - 1;
  while (lo < n && p[static_cast<std::size_t>(lo)] == 0.0) ++lo;
  while (hi >= lo && p[static_cast<std::size_t>(hi)] == 0.0) --hi;
  HardyBracket out;
  if (hi <= lo) return out;  // point mass: constant functions only, bracket (0,0)

  // Median state of the pmf.
  int med = lo;
  double cum = 0.0;
  for (int k = lo; k <= hi; ++k) {
    cum += p[static_cast<std::size_t>(k)];
    if (cum >= 0.5) {
      med = k;
      break;
    }
  }

  // Right side: B+ = max_{m > med} P([m, hi]) * log(1 + 1/P([m, hi])) *
  //                  sum_{k=med+1}^{m} 1/min(p(k), p(k-1)).
  // Tail masses accumulate from the far endpoint inward: a running difference
  // from the median side would drown exponentially small tails in rounding
  // noise and inflate the functional by orders of magnitude.
  double best = 0.0;
  std::vector<double> mass(static_cast<std::size_t>(hi) + 2, 0.0);
  for (int k = hi; k > med; --k)
    mass[static_cast<std::size_t>(k)] =
        mass[static_cast<std::size_t>(k) + 1] + p[static_cast<std::size_t>(k)];
  double resistance = 0.0;
  for (int m = med + 1; m <= hi; ++m) {
    resistance += 1.0 / std::min(p[static_cast<std::size_t>(m)], p[static_cast<std::size_t>(m - 1)]);
    double t = mass[static_cast<std::size_t>(m)];
    if (t > 0.0) best = std::max(best, t * std::log1p(1.0 / t) * resistance);
  }
  // Left side, mirrored.
  std::fill(mass.begin(), mass.end(), 0.0);
  for (int k = lo; k < med; ++k)
    mass[static_cast<std::size_t>(k) + 1] =
        mass[static_cast<std::size_t>(k)] + p[static_cast<std::size_t>(k)];
  resistance = 0.0;
  for (int m = med - 1; m >= lo; --m) {
    resistance += 1.0 / std::min(p[static_cast<std::size_t>(m)], p[static_cast<std::size_t>(m + 1)]);
    double t = mass[static_cast<std::size_t>(m) + 1];
    if (t > 0.0) best = std::max(best, t * std::log1p(1.0 / t) * resistance);
  }

  out.functional = best;
  out.lower = best / bracket_factor;
  out.upper = best * bracket_factor;
  return out;
}

SplitSector::SplitSector(const Sector& sector, const RateFunction& rate, int sites1)
    : full_(sector), rate_(rate), sites1_(sites1), sites2_(sector.sites() - sites1) {
  if (sites1_ < 1 || sites2_ < 1)
    throw DomainError("split needs at least one site in each block");
  if (sector.box().dimension() != 1)
    throw DomainError("block splits are defined on segments only");
  if (rate_.n_max() < sector.particles() + 1)
    throw TableError("rate table too short for split calculus: need c up to n=" +
                     std::to_string(sector.particles() + 1));
  int N = sector.particles();
  gamma_ = gamma_distribution(sites1_, sites2_, N, rate_);

  // Fibers in product order: left-block sector index major, right minor.
  fibers_.resize(static_cast<std::size_t>(N) + 1);
  Box left = Box::segment(sites1_);
  Box right = Box::segment(sites2_);
  std::vector<int> eta(static_cast<std::size_t>(sector.sites()));
  for (int n = 0; n <= N; ++n) {
    Sector s1(left, n);
    Sector s2(right, N - n);
    Fiber& fb = fibers_[static_cast<std::size_t>(n)];
    fb.size1 = s1.size();
    fb.size2 = s2.size();
    fb.full_index.resize(fb.size1 * fb.size2);
    fb.w1.resize(fb.size1);
    fb.w2.resize(fb.size2);
    {
      DiscreteMeasure m1 = canonical_measure(s1, rate_);
      DiscreteMeasure m2 = canonical_measure(s2, rate_);
      for (std::uint64_t a = 0; a < fb.size1; ++a) fb.w1[a] = m1.prob(a);
      for (std::uint64_t b = 0; b < fb.size2; ++b) fb.w2[b] = m2.prob(b);
    }
    std::vector<int> eta1(static_cast<std::size_t>(sites1_));
    std::vector<int> eta2(static_cast<std::size_t>(sites2_));
    for (std::uint64_t a = 0; a < fb.size1; ++a) {
      s1.unrank(a, eta1);
      for (int x = 0; x < sites1_; ++x) eta[static_cast<std::size_t>(x)] = eta1[static_cast<std::size_t>(x)];
      for (std::uint64_t b = 0; b < fb.size2; ++b) {
        s2.unrank(b, eta2);
        for (int x = 0; x < sites2_; ++x)
          eta[static_cast<std::size_t>(sites1_ + x)] = eta2[static_cast<std::size_t>(x)];
        fb.full_index[a * fb.size2 + b] = static_cast<std::uint32_t>(full_.rank(eta));
      }
    }
  }
  into_left_.resize(static_cast<std::size_t>(N) + 1);
  into_right_.resize(static_cast<std::size_t>(N) + 1);
}

std::span<const std::uint32_t> SplitSector::fiber_states(int n) const {
  if (n < 0 || n > total()) throw DomainError("fiber index out of range");
  return fibers_[static_cast<std::size_t>(n)].full_index;
}

double SplitSector::conditional_expectation(std::span<const double> f, int n) const {
  if (n < 0 || n > total()) throw DomainError("fiber index out of range");
  if (f.size() != full_.size()) throw DomainError("function length does not match the sector");
  const Fiber& fb = fiber(n);
  long double acc = 0.0L;
  for (std::uint64_t a = 0; a < fb.size1; ++a)
    for (std::uint64_t b = 0; b < fb.size2; ++b)
      acc += (long double)fb.w1[a] * fb.w2[b] * f[fb.full_index[a * fb.size2 + b]];
  return (double)acc;
}

double SplitSector::conditional_covariance(std::span<const double> f, std::span<const double> g,
                                           int n) const {
  const Fiber& fb = fiber(n);
  double mf = conditional_expectation(f, n);
  double mg = conditional_expectation(g, n);
  long double acc = 0.0L;
  for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
    std::uint32_t s = fb.full_index[k];
    acc += (long double)fiber_weight(fb, k) * (f[s] - mf) * (g[s] - mg);
  }
  return (double)acc;
}

double SplitSector::conditional_entropy(std::span<const double> f, int n) const {
  const Fiber& fb = fiber(n);
  long double mean = 0.0L, flogf = 0.0L;
  for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
    double v = f[fb.full_index[k]];
    if (v < 0.0) throw DomainError("entropy needs f >= 0");
    long double wgt = fiber_weight(fb, k);
    mean += wgt * v;
    if (v > 0.0) flogf += wgt * v * std::log(v);
  }
  if (mean <= 0.0L) return 0.0;
  return (double)(flogf - mean * std::log((double)mean));
}

double SplitSector::mean_block_entropy_left(std::span<const double> f) const {
  // nu[ Ent over the left block with the right part frozen ].
  long double acc = 0.0L;
  for (int n = 0; n <= total(); ++n) {
    const Fiber& fb = fiber(n);
    double gn = gamma_.prob(static_cast<std::size_t>(n));
    for (std::uint64_t b = 0; b < fb.size2; ++b) {
      long double mean = 0.0L, flogf = 0.0L;
      for (std::uint64_t a = 0; a < fb.size1; ++a) {
        double v = f[fb.full_index[a * fb.size2 + b]];
        if (v < 0.0) throw DomainError("entropy needs f >= 0");
        mean += (long double)fb.w1[a] * v;
        if (v > 0.0) flogf += (long double)fb.w1[a] * v * std::log(v);
      }
      double ent = mean > 0.0L ? (double)(flogf - mean * std::log((double)mean)) : 0.0;
      acc += (long double)gn * fb.w2[b] * ent;
    }
  }
  return (double)acc;
}

double SplitSector::mean_block_entropy_right(std::span<const double> f) const {
  long double acc = 0.0L;
  for (int n = 0; n <= total(); ++n) {
    const Fiber& fb = fiber(n);
    double gn = gamma_.prob(static_cast<std::size_t>(n));
    for (std::uint64_t a = 0; a < fb.size1; ++a) {
      long double mean = 0.0L, flogf = 0.0L;
      for (std::uint64_t b = 0; b < fb.size2; ++b) {
        double v = f[fb.full_index[a * fb.size2 + b]];
        if (v < 0.0) throw DomainError("entropy needs f >= 0");
        mean += (long double)fb.w2[b] * v;
        if (v > 0.0) flogf += (long double)fb.w2[b] * v * std::log(v);
      }
      double ent = mean > 0.0L ? (double)(flogf - mean * std::log((double)mean)) : 0.0;
      acc += (long double)gn * fb.w1[a] * ent;
    }
  }
  return (double)acc;
}

double SplitSector::conditional_dirichlet_within(std::span<const double> f,
                                                 std::span<const double> g, int n) const {
  // Bonds strictly inside each half, averaged under the conditional measure.
  const Fiber& fb = fiber(n);
  const Box& box = full_.box();
  std::vector<int> eta(static_cast<std::size_t>(full_.sites()));
  long double acc = 0.0L;
  for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
    std::uint32_t s = fb.full_index[k];
    full_.unrank(s, eta);
    double wgt = fiber_weight(fb, k);
    for (int x = 0; x < full_.sites(); ++x) {
      if (eta[static_cast<std::size_t>(x)] <= 0) continue;
      double c = rate_.at(eta[static_cast<std::size_t>(x)]);
      for (int y : box.neighbors(x)) {
        bool same_half = (x < sites1_) == (y < sites1_);
        if (!same_half) continue;
        std::uint64_t t = full_.rank_after_move(eta, s, x, y);
        double df = f[t] - f[s];
        double dg = g[t] - g[s];
        acc += 0.5L * (long double)wgt * c * df * dg;
      }
    }
  }
  return (double)acc;
}

double SplitSector::cross_bond_dirichlet(const DiscreteMeasure& nu, std::span<const double> f,
                                         std::span<const double> g) const {
  const Box& box = full_.box();
  std::vector<int> eta(static_cast<std::size_t>(full_.sites()));
  long double acc = 0.0L;
  for (std::uint64_t s = 0; s < full_.size(); ++s) {
    full_.unrank(s, eta);
    double p = nu.prob(s);
    if (p == 0.0) continue;
    for (int x = 0; x < full_.sites(); ++x) {
      if (eta[static_cast<std::size_t>(x)] <= 0) continue;
      double c = rate_.at(eta[static_cast<std::size_t>(x)]);
      for (int y : box.neighbors(x)) {
        bool same_half = (x < sites1_) == (y < sites1_);
        if (same_half) continue;
        std::uint64_t t = full_.rank_after_move(eta, s, x, y);
        acc += 0.5L * (long double)p * c * (f[t] - f[s]) * (g[t] - g[s]);
      }
    }
  }
  return (double)acc;
}

const SplitSector::FlowTerms& SplitSector::flow_into_left(int n) const {
  auto& slot = into_left_[static_cast<std::size_t>(n)];
  if (!slot) {
    FlowTerms terms;
    const Fiber& fb = fiber(n);
    std::vector<int> eta(static_cast<std::size_t>(full_.sites()));
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      std::uint32_t s = fb.full_index[k];
      full_.unrank(s, eta);
      for (int x = 0; x < sites1_; ++x) {
        double h = rate_.h(eta[static_cast<std::size_t>(x)]);
        for (int y = sites1_; y < full_.sites(); ++y) {
          if (eta[static_cast<std::size_t>(y)] <= 0) continue;  // c(0) = 0 kills the term
          double c = rate_.at(eta[static_cast<std::size_t>(y)]);
          terms.src.push_back(static_cast<std::uint32_t>(k));
          terms.tgt.push_back(static_cast<std::uint32_t>(full_.rank_after_move(eta, s, y, x)));
          terms.hc.push_back(h * c);
        }
      }
    }
    slot = std::move(terms);
  }
  return *slot;
}

const SplitSector::FlowTerms& SplitSector::flow_into_right(int n) const {
  auto& slot = into_right_[static_cast<std::size_t>(n)];
  if (!slot) {
    FlowTerms terms;
    const Fiber& fb = fiber(n);
    std::vector<int> eta(static_cast<std::size_t>(full_.sites()));
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      std::uint32_t s = fb.full_index[k];
      full_.unrank(s, eta);
      for (int y = sites1_; y < full_.sites(); ++y) {
        double h = rate_.h(eta[static_cast<std::size_t>(y)]);
        for (int x = 0; x < sites1_; ++x) {
          if (eta[static_cast<std::size_t>(x)] <= 0) continue;
          double c = rate_.at(eta[static_cast<std::size_t>(x)]);
          terms.src.push_back(static_cast<std::uint32_t>(k));
          terms.tgt.push_back(static_cast<std::uint32_t>(full_.rank_after_move(eta, s, x, y)));
          terms.hc.push_back(h * c);
        }
      }
    }
    slot = std::move(terms);
  }
  return *slot;
}

std::vector<double> SplitSector::flow_observable(const FlowTerms& terms, int n) const {
  // G(eta) = sum over pairs of h*c, as a function on the fiber.
  const Fiber& fb = fiber(n);
  std::vector<double> g(fb.full_index.size(), 0.0);
  for (std::size_t t = 0; t < terms.src.size(); ++t) g[terms.src[t]] += terms.hc[t];
  return g;
}

SplitSector::GradientRep SplitSector::gradient_representation(std::span<const double> f,
                                                              int n) const {
  if (sites1_ != sites2_)
    throw DomainError("gradient representations are supported for equal halves only");
  int N = total();
  if (n < 1 || n > N) throw DomainError("fiber index must be in 1..N");
  if (f.size() != full_.size()) throw DomainError("function length does not match the sector");
  double half = static_cast<double>(sites1_);  // the per-pair normalizer

  GradientRep rep;
  rep.direct = conditional_expectation(f, n) - conditional_expectation(f, n - 1);

  {  // jumps into the left block, evaluated on fiber n-1
    const FlowTerms& terms = flow_into_left(n - 1);
    const Fiber& fb = fiber(n - 1);
    long double flow = 0.0L;
    std::vector<double> G(fb.full_index.size(), 0.0);
    for (std::size_t t = 0; t < terms.src.size(); ++t) {
      std::uint64_t k = terms.src[t];
      double wgt = fiber_weight(fb, k);
      flow += (long double)wgt * terms.hc[t] * (f[terms.tgt[t]] - f[fb.full_index[k]]);
      G[k] += terms.hc[t];
    }
    // Cov(f, G | n-1) over the fiber.
    long double mf = 0.0L, mg = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      long double wgt = fiber_weight(fb, k);
      mf += wgt * f[fb.full_index[k]];
      mg += wgt * G[k];
    }
    long double cov = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k)
      cov += (long double)fiber_weight(fb, k) * (f[fb.full_index[k]] - (double)mf) *
             (G[k] - (double)mg);
    double pref = gamma_.prob(static_cast<std::size_t>(n - 1)) /
                  gamma_.prob(static_cast<std::size_t>(n)) / (n * half);
    rep.via_lower = pref * (double)(flow + cov);
  }

  {  // jumps into the right block, evaluated on fiber n
    const FlowTerms& terms = flow_into_right(n);
    const Fiber& fb = fiber(n);
    long double flow = 0.0L;
    std::vector<double> G(fb.full_index.size(), 0.0);
    for (std::size_t t = 0; t < terms.src.size(); ++t) {
      std::uint64_t k = terms.src[t];
      double wgt = fiber_weight(fb, k);
      flow += (long double)wgt * terms.hc[t] * (f[terms.tgt[t]] - f[fb.full_index[k]]);
      G[k] += terms.hc[t];
    }
    long double mf = 0.0L, mg = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      long double wgt = fiber_weight(fb, k);
      mf += wgt * f[fb.full_index[k]];
      mg += wgt * G[k];
    }
    long double cov = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k)
      cov += (long double)fiber_weight(fb, k) * (f[fb.full_index[k]] - (double)mf) *
             (G[k] - (double)mg);
    double pref = gamma_.prob(static_cast<std::size_t>(N - n)) /
                  gamma_.prob(static_cast<std::size_t>(N - n + 1)) / ((N - n + 1) * half);
    rep.via_upper = -pref * (double)(flow + cov);
  }
  return rep;
}

SplitSector::AbParts SplitSector::ab_split(std::span<const double> f, int n) const {
  if (sites1_ != sites2_)
    throw DomainError("gradient representations are supported for equal halves only");
  int N = total();
  if (n < 1 || n > N) throw DomainError("fiber index must be in 1..N");
  AbParts parts;
  if (2 * n >= N) {  // ties at N/2 use this branch
    const FlowTerms& terms = flow_into_left(n - 1);
    const Fiber& fb = fiber(n - 1);
    long double flow = 0.0L;
    std::vector<double> G(fb.full_index.size(), 0.0);
    for (std::size_t t = 0; t < terms.src.size(); ++t) {
      std::uint64_t k = terms.src[t];
      flow += (long double)fiber_weight(fb, k) * terms.hc[t] *
              (f[terms.tgt[t]] - f[fb.full_index[k]]);
      G[k] += terms.hc[t];
    }
    long double mf = 0.0L, mg = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      long double wgt = fiber_weight(fb, k);
      mf += wgt * f[fb.full_index[k]];
      mg += wgt * G[k];
    }
    long double cov = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k)
      cov += (long double)fiber_weight(fb, k) * (f[fb.full_index[k]] - (double)mf) *
             (G[k] - (double)mg);
    double pref = gamma_.prob(static_cast<std::size_t>(n - 1)) /
                  gamma_.prob(static_cast<std::size_t>(n)) / (n * sites1_);
    parts.a = pref * (double)flow;
    parts.b = pref * (double)cov;
  } else {
    const FlowTerms& terms = flow_into_right(n);
    const Fiber& fb = fiber(n);
    long double flow = 0.0L;
    std::vector<double> G(fb.full_index.size(), 0.0);
    for (std::size_t t = 0; t < terms.src.size(); ++t) {
      std::uint64_t k = terms.src[t];
      flow += (long double)fiber_weight(fb, k) * terms.hc[t] *
              (f[terms.tgt[t]] - f[fb.full_index[k]]);
      G[k] += terms.hc[t];
    }
    long double mf = 0.0L, mg = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k) {
      long double wgt = fiber_weight(fb, k);
      mf += wgt * f[fb.full_index[k]];
      mg += wgt * G[k];
    }
    long double cov = 0.0L;
    for (std::uint64_t k = 0; k < fb.full_index.size(); ++k)
      cov += (long double)fiber_weight(fb, k) * (f[fb.full_index[k]] - (double)mf) *
             (G[k] - (double)mg);
    double pref = gamma_.prob(static_cast<std::size_t>(N - n)) /
                  gamma_.prob(static_cast<std::size_t>(N - n + 1)) / ((N - n + 1) * sites1_);
    parts.a = -pref * (double)flow;
    parts.b = -pref * (double)cov;
  }
  return parts;
}

std::vector<DiagnosticsRow> diagnostics_scan(const RateFunction& rate,
                                             std::span<const int> sites_grid,
                                             std::span<const int> particle_grid,
                                             int functions_per_cell, std::uint64_t seed) {
  std::vector<DiagnosticsRow> rows;
  for (int L : sites_grid) {
    if (L < 2 || L % 2 != 0)
      throw DomainError("diagnostics scan needs even segment sizes (equal halves)");
    for (int N : particle_grid) {
      Sector sector(Box::segment(L), N);
      SplitSector split(sector, rate, L / 2);
      const DiscreteMeasure& gamma = split.gamma();
      DiscreteMeasure nu = canonical_measure(sector, rate);

      // Ratio-bound constant: r(n) = [gamma(n-1)/gamma(n)] (N-n+1)/n must be
      // bounded above and below; report max r and max 1/r.
      double rmax = 0.0, rinv = 0.0;
      for (int n = 1; n <= N; ++n) {
        double r = gamma.prob(static_cast<std::size_t>(n - 1)) /
                   gamma.prob(static_cast<std::size_t>(n)) * (N - n + 1) / n;
        rmax = std::max(rmax, r);
        rinv = std::max(rinv, 1.0 / r);
      }
      rows.push_back({"count_ratio_max", rate.label, L, N, -1, rmax});
      rows.push_back({"count_ratio_inv_max", rate.label, L, N, -1, rinv});

      // Flow-part strength: implied constant in
      // A(n)^2 <= C (L/2)^2/N * (max cond means) * (ratio-weighted forms),
      // maximized over random positive f and n.
      std::mt19937_64 rng(seed ^ (std::uint64_t)L << 32 ^ (std::uint64_t)N);
      std::normal_distribution<double> gauss;
      double implied_flow = 0.0;
      double cov_c = 0.0, cov_h = 0.0;
      std::vector<double> f(sector.size()), sqrtf(sector.size());
      std::vector<double> c_field(sector.size()), h_field(sector.size());
      std::vector<int> eta(static_cast<std::size_t>(L));
      for (std::uint64_t s = 0; s < sector.size(); ++s) {
        sector.unrank(s, eta);
        double cs = 0.0, hs = 0.0;
        for (int x = 0; x < L; ++x) {
          cs += rate.at(eta[static_cast<std::size_t>(x)]);
          hs += rate.h(eta[static_cast<std::size_t>(x)]);
        }
        c_field[s] = cs;
        h_field[s] = hs;
      }
      for (int trial = 0; trial < functions_per_cell; ++trial) {
        for (std::uint64_t s = 0; s < sector.size(); ++s) {
          f[s] = std::exp(gauss(rng));
          sqrtf[s] = std::sqrt(f[s]);
        }
        for (int n = 1; n <= N; ++n) {
          auto parts = split.ab_split(f, n);
          double cond_hi = std::max(split.conditional_expectation(f, n),
                                    split.conditional_expectation(f, n - 1));
          double ratio = gamma.prob(static_cast<std::size_t>(n - 1)) /
                         gamma.prob(static_cast<std::size_t>(n));
          double forms = ratio * split.conditional_dirichlet_within(sqrtf, sqrtf, n - 1) +
                         split.conditional_dirichlet_within(sqrtf, sqrtf, n);
          double denom = (L / 2.0) * (L / 2.0) / N * cond_hi * forms;
          if (denom > 0.0)
            implied_flow = std::max(implied_flow, parts.a * parts.a / denom);
        }
        // Covariance-inequality constants on the full sector.
        double entf = entropy(nu, f);
        double meanf = nu.mean(f);
        double cvc = nu.covariance(f, c_field);
        double cvh = nu.covariance(f, h_field);
        if (entf > 0.0 && meanf > 0.0) {
          cov_c = std::max(cov_c, cvc * cvc / (N * meanf * entf));
          cov_h = std::max(cov_h, cvh * cvh * N / (meanf * (meanf + entf)));
        }
      }
      rows.push_back({"flow_bound_implied_const", rate.label, L, N, -1, implied_flow});
      rows.push_back({"cov_c_implied_const", rate.label, L, N, -1, cov_c});
      rows.push_back({"cov_h_implied_const", rate.label, L, N, -1, cov_h});

      // Centered moment-generating bounds for single-site observables
      // (site 0 by exchangeability), reported as implied constants on a
      // t-grid.  The h observable carries the N scaling inside the exponent.
      std::vector<double> c_site(sector.size()), h_site(sector.size());
      for (std::uint64_t s = 0; s < sector.size(); ++s) {
        sector.unrank(s, eta);
        c_site[s] = rate.at(eta[0]);
        h_site[s] = rate.h(eta[0]);
      }
      double implied_mgf_c = 0.0, implied_mgf_h = 0.0;
      for (double t : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0}) {
        std::vector<double> expc(sector.size()), exph(sector.size());
        double mc = nu.mean(c_site), mh = nu.mean(h_site);
        for (std::uint64_t s = 0; s < sector.size(); ++s) {
          expc[s] = std::exp(t * (c_site[s] - mc));
          exph[s] = std::exp(t * static_cast<double>(N) * (h_site[s] - mh));
        }
        double log_mc = std::log(nu.mean(expc));
        double log_mh = std::log(nu.mean(exph));
        implied_mgf_c = std::max(implied_mgf_c, log_mc / (N * t * t));
        // Solve log_mh <= log A + A (N t^2 + sqrt(N) |t|) for the smallest A.
        double u = N * t * t + std::sqrt((double)N) * std::abs(t);
        double lo = 1e-9, hi = 1e9;
        for (int it = 0; it < 200; ++it) {
          double mid = std::sqrt(lo * hi);
          if (std::log(mid) + mid * u >= log_mh)
            hi = mid;
          else
            lo = mid;
        }
        implied_mgf_h = std::max(implied_mgf_h, hi);
      }
      rows.push_back({"mgf_c_implied_const", rate.label, L, N, -1, implied_mgf_c});
      rows.push_back({"mgf_h_implied_const", rate.label, L, N, -1, implied_mgf_h});
    }
  }
  return rows;
}

}  // namespace zrlab
