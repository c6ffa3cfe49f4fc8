#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "zrlab/ensembles.hpp"
#include "zrlab/errors.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/site_law.hpp"

using namespace zrlab;

namespace {

double poisson_pmf(double lam, int k) {
  return std::exp(k * std::log(lam) - lam - std::lgamma(k + 1.0));
}

}  // namespace

TEST_SUITE("ensembles") {

TEST_CASE("independent particles: total count is Poisson") {
  RateFunction rate = linear_rate(1.0, 64);
  SiteLaw site = grand_canonical_site_law(rate, 0.7);
  CountLaw law = total_count_law(site, 5);
  CHECK(law.tail_bound < 1e-12);
  CHECK(law.mean() == doctest::Approx(3.5).epsilon(1e-10));
  CHECK(law.variance() == doctest::Approx(3.5).epsilon(1e-9));
  for (int n = 0; n < 30 && static_cast<std::size_t>(n) < law.size(); ++n)
    CHECK(law.prob(static_cast<std::size_t>(n)) ==
          doctest::Approx(poisson_pmf(3.5, n)).epsilon(1e-12));
}

TEST_CASE("geometric sites: total count is negative binomial") {
  RateFunction rate = constant_rate(512);
  SiteLaw site = grand_canonical_site_law(rate, 0.5);
  CountLaw law = total_count_law(site, 3);
  // p(n) = C(n+2, 2) (1/2)^3 (1/2)^n
  for (int n = 0; n < 25; ++n) {
    double ref = (n + 2.0) * (n + 1.0) / 2.0 * std::pow(0.5, n + 3);
    CHECK(law.prob(static_cast<std::size_t>(n)) ==
          doctest::Approx(ref).epsilon(1e-11));
  }
  CHECK(law.volume == 3);
}

TEST_CASE("count-law errors and caps") {
  RateFunction rate = linear_rate(1.0, 64);
  SiteLaw site = grand_canonical_site_law(rate, 0.5);
  CHECK_THROWS_AS(total_count_law(site, 0), DomainError);
  CountLaw law = total_count_law(site, 4);
  CHECK_THROWS_AS(llt_errors(law, -1), DomainError);
  CHECK_THROWS_AS(llt_errors(law, 1 << 28), TableError);
}

TEST_CASE("poisson regime error is tiny when the law is Poisson") {
  RateFunction rate = linear_rate(1.0, 64);
  SiteLaw site = grand_canonical_site_law(rate, 0.2);
  CountLaw law = total_count_law(site, 10);  // Poisson(2)
  LltErrors err = llt_errors(law, 2);
  CHECK(err.poisson_err < 1e-13);
  CHECK(err.gaussian_err > 0.0);  // a Poisson(2) is far from Gaussian
}

TEST_CASE("gaussian regime error decays like the inverse root volume") {
  RateFunction rate = staircase_rate(2, 256);
  double alpha = invert_fugacity(rate, 1.0);
  SiteLaw site = grand_canonical_site_law(rate, alpha);
  LltErrors e16 = llt_errors(total_count_law(site, 16), 16);
  LltErrors e64 = llt_errors(total_count_law(site, 64), 64);
  CHECK(e16.gaussian_err > e64.gaussian_err);
  double scaled16 = e16.gaussian_err * std::sqrt(site.variance * 16);
  double scaled64 = e64.gaussian_err * std::sqrt(site.variance * 64);
  double ratio = scaled16 / scaled64;
  CHECK(ratio > 1.0 / 3.0);
  CHECK(ratio < 3.0);
}

TEST_CASE("ensemble ratio against the Poisson closed form") {
  // Independent particles, volume 10, half sub-volume, 5 particles:
  // full ~ Poisson(5), complement ~ Poisson(2.5).
  RateFunction rate = linear_rate(1.0, 64);
  double sup = ensemble_ratio_sup(rate, 10, 0.5, 5);
  double best = 0.0;
  for (int n = 0; n <= 5; ++n)
    best = std::max(best, poisson_pmf(2.5, 5 - n) / poisson_pmf(5.0, 5));
  CHECK(sup == doctest::Approx(best).epsilon(1e-10));
  CHECK_THROWS_AS(ensemble_ratio_sup(rate, 10, 0.0, 5), DomainError);
  CHECK_THROWS_AS(ensemble_ratio_sup(rate, 10, 0.5, 0), DomainError);
}

TEST_CASE("regime scan covers the documented density cases") {
  RateFunction rate = staircase_rate(2, 512);
  std::vector<int> volumes = {8, 16};
  auto rows = regime_scan(rate, volumes, 0.5, 1.0);
  REQUIRE(!rows.empty());
  bool very_small = false, small = false, large = false;
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.sup_ratio));
    CHECK(r.sup_ratio > 0.0);
    if (r.regime == "very_small") very_small = true;
    if (r.regime == "small") small = true;
    if (r.regime == "large") large = true;
    CHECK(r.particles <= 4 * r.volume);
  }
  CHECK(very_small);
  CHECK(small);
  CHECK(large);
}

TEST_CASE("independent particles: canonical mean rate equals the fugacity") {
  RateFunction rate = linear_rate(1.0, 128);
  CHECK(equivalence_gap(rate, 6, 7) < 1e-11);
  CHECK(equivalence_gap(rate, 16, 16) < 1e-11);
}

TEST_CASE("two-site pocket: equivalence gap by hand") {
  // Constant rates, 2 sites, 3 particles: every configuration is equally
  // likely, nu[c(eta_0)] = P(eta_0 > 0) = 3/4, while alpha(1.5) = 0.6.
  RateFunction rate = constant_rate(1024);
  CHECK(equivalence_gap(rate, 2, 3) == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("centered-rate transform matches the Poisson closed form") {
  // For c(n) = n the site law is Poisson(alpha) and
  // E exp(t(c - alpha)) = exp(alpha(e^t - 1 - t)).
  RateFunction rate = linear_rate(1.0, 256);
  double alpha = 1.0;
  // e^{tk} amplifies the truncated tail, so cut much deeper than the default.
  SiteLaw site = grand_canonical_site_law(rate, alpha, 1e-20);
  for (double t : {-1.0, -0.5, 0.5, 1.0}) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < site.pmf.size(); ++k)
      acc += (long double)site.pmf[k] *
             std::exp((long double)t * ((double)k - alpha));
    double ref = std::exp(alpha * (std::exp(t) - 1.0 - t));
    CHECK((double)acc == doctest::Approx(ref).epsilon(1e-9));
    // And the documented envelope dominates it.
    double bound = std::exp(alpha * rate.lipschitz_a1 * t * t *
                            std::exp(rate.lipschitz_a1 * std::abs(t)));
    CHECK((double)acc <= bound);
  }
}

TEST_CASE("falsification suite passes on both families") {
  std::vector<double> rho = {0.25, 1.0, 4.0};
  std::vector<double> ts = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
  for (const char* spec : {"linear", "staircase:2"}) {
    // The geometric tail certificate at t=2 needs the table ratio
    // alpha*A0/(K+1) below e^{-t*A0}, which for the staircase at rho=4 means
    // a table in the thousands.
    RateFunction rate = rate_from_spec(spec, 1600);
    MgfSuiteResult res = mgf_suite(rate, rho, ts, 0x5eed);
    CHECK(res.checks_run > 0);
    CHECK(res.violations.empty());
    CHECK(res.fitted_growth_constant > 0.0);
    CHECK(std::isfinite(res.fitted_growth_constant));
    for (const auto& ic : res.implied) {
      CHECK(std::isfinite(ic.a_c));
      CHECK(std::isfinite(ic.a_h));
    }
  }
}

TEST_CASE("shift and inverse-rate identities at product marginals") {
  for (const char* spec : {"linear", "staircase:2", "constant"}) {
    RateFunction rate = rate_from_spec(spec, 512);
    std::vector<double> alphas = {0.0, 0.5, 1.0};
    if (std::string(spec) == "constant") alphas = {0.0, 0.3, 0.6};
    IdentityReport rep = identity_suite(rate, alphas);
    CHECK(rep.max_shift_residual < 1e-11);
    CHECK(rep.max_inverse_rate_residual < 1e-10);
    REQUIRE(rep.rows.size() == alphas.size());
    CHECK(rep.rows[0].inverse_rate_skipped);  // alpha = 0 has no mass to move
  }
}

TEST_CASE("entropy-covariance inequality with a constant observable") {
  DiscreteMeasure mu = DiscreteMeasure::from_weights(std::vector<double>{1, 1, 1, 1});
  std::vector<double> f = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> g = {5.0, 5.0, 5.0, 5.0};
  double ent = entropy(mu, f);
  EntropySlacks s = entropy_inequality_check(mu, f, g, 1.0);
  CHECK(s.plain == doctest::Approx(ent).epsilon(1e-12));
  CHECK(s.symmetric == doctest::Approx(ent).epsilon(1e-12));
  CHECK_THROWS_AS(entropy_inequality_check(mu, f, g, 0.0), DomainError);
}

TEST_CASE("entropy-covariance inequality on random data") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss;
  double min_plain = 1e300, min_sym = 1e300;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(12), f(12), g(12);
    for (int i = 0; i < 12; ++i) {
      w[static_cast<std::size_t>(i)] = std::exp(gauss(rng));
      f[static_cast<std::size_t>(i)] = std::exp(gauss(rng));
      g[static_cast<std::size_t>(i)] = gauss(rng);
    }
    DiscreteMeasure mu = DiscreteMeasure::from_weights(w);
    for (double t : {0.5, 2.0}) {
      EntropySlacks s = entropy_inequality_check(mu, f, g, t);
      min_plain = std::min(min_plain, s.plain);
      min_sym = std::min(min_sym, s.symmetric);
    }
  }
  CHECK(min_plain >= -1e-12);
  CHECK(min_sym >= -1e-12);
}

TEST_CASE("sqrt-entropy comparison is nonnegative and tight on constants") {
  DiscreteMeasure mu = DiscreteMeasure::from_weights(std::vector<double>{2, 1, 1});
  std::vector<double> c = {3.0, 3.0, 3.0};
  CHECK(std::abs(rothaus_slack(mu, c)) < 1e-14);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(8), f(8);
    for (auto& v : w) v = std::exp(gauss(rng));
    for (auto& v : f) v = std::exp(gauss(rng));
    CHECK(rothaus_slack(DiscreteMeasure::from_weights(w), f) >= -1e-12);
  }
}

}  // TEST_SUITE
