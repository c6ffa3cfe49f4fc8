#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "zrlab/errors.hpp"
#include "zrlab/logsum.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/site_law.hpp"

using namespace zrlab;

TEST_SUITE("measures") {

TEST_CASE("log-space helpers") {
  CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
  CHECK(log_add(kNegInf, std::log(3.0)) == doctest::Approx(std::log(3.0)));
  CHECK(log_add(kNegInf, kNegInf) == kNegInf);
  std::vector<double> ls = {std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(ls) == doctest::Approx(std::log(6.0)));
}

TEST_CASE("scaled convolution is exact on small supports") {
  std::vector<double> la = {std::log(1.0), std::log(1.0)};
  std::vector<double> lb = {std::log(2.0), std::log(3.0)};
  ScaledVec a = scaled_from_log(la);
  ScaledVec b = scaled_from_log(lb);
  ScaledVec c = convolve(a, b, 10);
  REQUIRE(c.v.size() == 3);
  CHECK(c.at(0) == doctest::Approx(2.0));
  CHECK(c.at(1) == doctest::Approx(5.0));
  CHECK(c.at(2) == doctest::Approx(3.0));
  // The cut drops indices above n_cut.
  ScaledVec cut = convolve(a, b, 1);
  CHECK(cut.v.size() == 2);
  CHECK(cut.at(1) == doctest::Approx(5.0));
}

TEST_CASE("normalized measures from weights") {
  std::vector<double> w = {1.0, 2.0, 1.0};
  DiscreteMeasure mu = DiscreteMeasure::from_weights(w);
  CHECK(mu.prob(0) == doctest::Approx(0.25));
  CHECK(mu.prob(1) == doctest::Approx(0.5));
  double tot = 0.0;
  for (double p : mu.probs()) tot += p;
  CHECK(tot == doctest::Approx(1.0));
  std::vector<double> f = {1.0, 2.0, 4.0};
  std::vector<double> f2 = {1.0, 4.0, 16.0};
  CHECK(mu.mean(f) == doctest::Approx(0.25 + 1.0 + 1.0));
  CHECK(mu.variance(f) == doctest::Approx(mu.mean(f2) - 2.25 * 2.25));
}

TEST_CASE("independent particles: canonical law is multinomial") {
  // c(n) = n makes the weights 1/eta!; for L=2, N=2 that is (1/4, 1/2, 1/4).
  RateFunction rate = linear_rate(1.0, 8);
  Sector s(Box::segment(2), 2);
  DiscreteMeasure nu = canonical_measure(s, rate);
  CHECK(nu.prob(0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(nu.prob(1) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(nu.prob(2) == doctest::Approx(0.25).epsilon(1e-13));

  Sector s3(Box::segment(3), 4);
  DiscreteMeasure nu3 = canonical_measure(s3, rate);
  std::vector<int> eta(3);
  for (std::uint64_t r = 0; r < s3.size(); ++r) {
    s3.unrank(r, eta);
    double lp = std::lgamma(5.0) - 4.0 * std::log(3.0);
    for (int v : eta) lp -= std::lgamma(v + 1.0);
    CHECK(nu3.prob(r) == doctest::Approx(std::exp(lp)).epsilon(1e-12));
  }
}

TEST_CASE("canonical law is move-invariant (detailed balance by hand)") {
  RateFunction rate = staircase_rate(2, 8);
  Sector s(Box::segment(3), 5);
  DiscreteMeasure nu = canonical_measure(s, rate);
  std::vector<int> eta(3), moved(3);
  for (std::uint64_t r = 0; r < s.size(); ++r) {
    s.unrank(r, eta);
    for (int x = 0; x < 3; ++x) {
      if (eta[static_cast<std::size_t>(x)] == 0) continue;
      for (int y : s.box().neighbors(x)) {
        moved = eta;
        --moved[static_cast<std::size_t>(x)];
        ++moved[static_cast<std::size_t>(y)];
        std::uint64_t q = s.rank(moved);
        double lhs = nu.prob(r) * rate.at(eta[static_cast<std::size_t>(x)]);
        double rhs = nu.prob(q) * rate.at(moved[static_cast<std::size_t>(y)]);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("entropy: nonnegative, zero on constants, 1-homogeneous") {
  DiscreteMeasure mu = DiscreteMeasure::from_weights(std::vector<double>{1, 2, 3, 4});
  std::vector<double> c = {2.0, 2.0, 2.0, 2.0};
  CHECK(entropy(mu, c) == doctest::Approx(0.0).epsilon(1e-15));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> f = {u(rng), u(rng), u(rng), u(rng)};
    double e = entropy(mu, f);
    CHECK(e >= 0.0);
    std::vector<double> f2 = f;
    for (double& v : f2) v *= 3.0;
    CHECK(entropy(mu, f2) == doctest::Approx(3.0 * e).epsilon(1e-10));
  }
  // f with a zero entry is legal: 0 log 0 = 0.
  std::vector<double> fz = {0.0, 1.0, 1.0, 1.0};
  CHECK(std::isfinite(entropy(mu, fz)));
}

TEST_CASE("site law at linear rates is Poisson") {
  RateFunction rate = linear_rate(1.0, 64);
  // The default tail tolerance cuts near k = 16; ask for more so the first 20
  // entries are all tabulated.
  SiteLaw law = grand_canonical_site_law(rate, 1.0, 1e-22);
  CHECK(law.log_z == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(law.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(law.variance == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(law.pmf.size() >= 20);
  for (int k = 0; k < 20; ++k) {
    double pk = std::exp(-1.0 - std::lgamma(k + 1.0));
    CHECK(law.pmf[static_cast<std::size_t>(k)] == doctest::Approx(pk).epsilon(1e-12));
  }
  CHECK(law.tail_bound < 1e-13);
}

TEST_CASE("site law at constant rates is geometric") {
  RateFunction rate = constant_rate(256);
  SiteLaw law = grand_canonical_site_law(rate, 0.5);
  // Z = 1/(1-alpha) = 2; mean = alpha/(1-alpha) = 1; var = alpha/(1-alpha)^2.
  CHECK(law.log_z == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(law.mean == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(law.variance == doctest::Approx(2.0).epsilon(1e-10));
  for (int k = 0; k < 10; ++k)
    CHECK(law.pmf[static_cast<std::size_t>(k)] ==
          doctest::Approx(0.5 * std::pow(0.5, k)).epsilon(1e-12));
}

TEST_CASE("fugacity inversion hits the requested density") {
  RateFunction lin = linear_rate(1.0, 256);
  CHECK(invert_fugacity(lin, 1.5) == doctest::Approx(1.5).epsilon(1e-10));
  RateFunction con = constant_rate(2048);
  CHECK(invert_fugacity(con, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  // Round trip at an awkward density.
  RateFunction st = staircase_rate(2, 256);
  double alpha = invert_fugacity(st, 2.7);
  CHECK(grand_canonical_site_law(st, alpha).mean == doctest::Approx(2.7).epsilon(1e-9));
  CHECK_THROWS_AS(invert_fugacity(lin, -1.0), DomainError);
}

TEST_CASE("density scan reports increasing fugacities") {
  RateFunction st = staircase_rate(2, 256);
  auto rows = density_scan(st, 0.1, 5.0, 9);
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].alpha > rows[i - 1].alpha);
    CHECK(rows[i].rho > rows[i - 1].rho);
  }
  for (const auto& r : rows) {
    CHECK(r.alpha_over_rho > 0.0);
    CHECK(r.sigma2_over_rho > 0.0);
  }
}

}  // TEST_SUITE
