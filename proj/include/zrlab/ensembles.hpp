#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zrlab/logsum.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/site_law.hpp"

namespace zrlab {

// Law of the total particle count over `volume` independent sites.
//
// The pmf is the volume-fold convolution of the truncated site pmf, computed
// by repeated doubling in scaled linear space.  Entries below `exact_below`
// are exact for the truncated site law; `tail_bound` certifies all mass the
// table does not account for (site-law tails plus convolution trimming), so
// table mass + tail_bound == 1 by construction.
struct CountLaw {
  int volume = 0;
  double site_mean = 0.0;
  double site_variance = 0.0;
  ScaledVec law;
  double tail_bound = 0.0;
  std::size_t exact_below = 0;

  std::size_t size() const { return law.v.size(); }
  double prob(std::size_t n) const;
  double log_prob(std::size_t n) const;
  double mean() const;
  double variance() const;
};

CountLaw total_count_law(const SiteLaw& site, int volume);

struct LltErrors {
  double poisson_err = 0.0;
  double gaussian_err = 0.0;
};

// Sup-distance of the count law from its Poisson(N) and Gaussian local
// approximations.  The Poisson error scans 0 < n <= N; the Gaussian error
// scans the whole table against sqrt(sigma2 V) * p(n) vs the normal density
// at (n - rho V) / sqrt(sigma2 V).
LltErrors llt_errors(const CountLaw& law, int particles);

// Best comparison constant between the canonical measure on `volume` sites
// with `particles` particles and the product law on a sub-volume of size
// floor(sub_fraction * volume): sup_n p_rest(N - n) / p_full(N) at density
// N / volume.
double ensemble_ratio_sup(const RateFunction& rate, int volume,
                          double sub_fraction, int particles);

// |nu[c(eta_x)] - mu[c(eta_x)]| at matched density N/volume.  The canonical
// single-site marginal is computed from the convolution identity
// nu[eta_x = k] proportional to p_1(k) * p_{V-1}(N - k); the grand-canonical
// mean of c equals the fugacity exactly.  The marginal law is the same at
// every site, so `site` only undergoes a range check.
double equivalence_gap(const RateFunction& rate, int volume, int particles,
                       int site = 0);

struct RegimeRow {
  std::string regime;
  int volume = 0;
  int particles = 0;
  double sup_ratio = 0.0;
};

// Comparison-constant scan organized by the density regime of the pair
// (volume, N): "very_small" for N <= 5, "small" for n0 <= N <= rho0*volume,
// "large" for N > rho0*volume.
std::vector<RegimeRow> regime_scan(const RateFunction& rate,
                                   const std::vector<int>& volumes,
                                   double sub_fraction, double rho0 = 1.0,
                                   int n0 = 6);

struct MgfViolation {
  std::string check;
  double rho = 0.0;
  double t = 0.0;
  double value = 0.0;
  double bound = 0.0;
};

struct ImpliedConstants {
  int sites = 0;
  int particles = 0;
  double a_c = 0.0;  // centered single-site rate observable
  double a_h = 0.0;  // N-scaled single-site inverse-rate observable
};

struct MgfSuiteResult {
  int checks_run = 0;
  std::vector<MgfViolation> violations;
  // Smallest C with log mu[e^{t eta}] <= C t rho e^{C t} over the grid.
  double fitted_growth_constant = 0.0;
  std::vector<ImpliedConstants> implied;
};

// Falsification suite for the moment-generating-function bounds:
//   - centered rate MGF against exp(alpha a1 t^2 e^{a1 |t|});
//   - occupation MGF with the fitted growth constant reported;
//   - the Taylor bound E[e^X] <= exp(E[X] + E[X^2 e^{|X|}]/2) on random
//     finitely supported variables;
//   - the square-root transfer lemma with g measured from the MGF itself;
//   - implied sector constants for the single-site centered observables.
// Every truncated expectation carries a certified tail; a bound passes only
// if value + tail <= bound.
MgfSuiteResult mgf_suite(const RateFunction& rate,
                         const std::vector<double>& rho_grid,
                         const std::vector<double>& t_grid,
                         std::uint64_t seed = 0x5eed);

struct IdentityRow {
  double alpha = 0.0;
  double shift_residual = 0.0;      // max over indicator basis
  double inverse_rate_residual = 0.0;
  bool inverse_rate_skipped = false;
  double h_variance_times_rho = 0.0;
};

struct IdentityReport {
  std::vector<IdentityRow> rows;
  double max_shift_residual = 0.0;
  double max_inverse_rate_residual = 0.0;
};

// Exact product-measure identities on a fugacity grid: mu[c f] = alpha
// mu[f(.+1)] over the indicator basis, and mu[1/c(n+1)] = (Z-1)/(alpha Z).
// alpha = 0 rows skip the second identity (removable singularity).
IdentityReport identity_suite(const RateFunction& rate,
                              const std::vector<double>& alpha_grid);

struct EntropySlacks {
  double plain = 0.0;       // one-sided form
  double symmetric = 0.0;   // form with the larger of the two MGFs
};

// Slack of the entropy inequality
//   nu[f, g] <= nu[f]/t log nu[e^{t(g - nu g)}] + Ent(f)/t
// and of its symmetrized variant.  Nonnegative up to rounding for any f >= 0
// and t > 0.
EntropySlacks entropy_inequality_check(const DiscreteMeasure& mu,
                                       const std::vector<double>& f,
                                       const std::vector<double>& g, double t);

// Slack of Ent(f) <= Ent((sqrt f - mean sqrt f)^2) + 2 Var(sqrt f).
double rothaus_slack(const DiscreteMeasure& mu, const std::vector<double>& f);

}  // namespace zrlab
