#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "zrlab/decomposition.hpp"
#include "zrlab/errors.hpp"
#include "zrlab/generator.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/spectral.hpp"

using namespace zrlab;

namespace {

double binom_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

// Left-count pmf by direct summation of canonical weights (the production
// code path never enumerates fibers, so this is an independent oracle).
std::vector<double> gamma_by_enumeration(int sites1, int sites2, int total,
                                         const RateFunction& rate) {
  Sector sec(Box::segment(sites1 + sites2), total);
  DiscreteMeasure nu = canonical_measure(sec, rate);
  std::vector<double> out(static_cast<std::size_t>(total) + 1, 0.0);
  std::vector<int> eta(static_cast<std::size_t>(sites1 + sites2));
  for (std::uint64_t r = 0; r < sec.size(); ++r) {
    sec.unrank(r, eta);
    int n = 0;
    for (int x = 0; x < sites1; ++x) n += eta[static_cast<std::size_t>(x)];
    out[static_cast<std::size_t>(n)] += nu.prob(r);
  }
  return out;
}

std::vector<double> random_positive(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<double> f(n);
  for (auto& v : f) v = std::exp(gauss(rng));
  return f;
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("independent particles: left count is binomial") {
  RateFunction rate = linear_rate(1.0, 10);
  DiscreteMeasure g13 = gamma_distribution(1, 3, 3, rate);
  REQUIRE(g13.size() == 4);
  for (int n = 0; n <= 3; ++n)
    CHECK(g13.prob(static_cast<std::size_t>(n)) ==
          doctest::Approx(binom_pmf(3, n, 0.25)).epsilon(1e-12));

  DiscreteMeasure g22 = gamma_distribution(2, 2, 6, rate);
  REQUIRE(g22.size() == 7);
  for (int n = 0; n <= 6; ++n)
    CHECK(g22.prob(static_cast<std::size_t>(n)) ==
          doctest::Approx(binom_pmf(6, n, 0.5)).epsilon(1e-12));
}

TEST_CASE("interacting rates: left count matches brute-force enumeration") {
  RateFunction rate = staircase_rate(2, 8);
  for (auto [s1, s2, N] : {std::tuple{2, 2, 5}, {1, 3, 4}, {3, 2, 6}}) {
    DiscreteMeasure g = gamma_distribution(s1, s2, N, rate);
    auto ref = gamma_by_enumeration(s1, s2, N, rate);
    REQUIRE(g.size() == ref.size());
    for (std::size_t n = 0; n < ref.size(); ++n)
      CHECK(g.prob(n) == doctest::Approx(ref[n]).epsilon(1e-11));
  }
}

TEST_CASE("metropolis chain from a pmf") {
  std::vector<double> w = {0.25, 0.5, 0.25};
  BirthDeathChain ch = birth_death_generator(DiscreteMeasure::from_weights(w));
  REQUIRE(ch.states() == 3);
  CHECK(ch.up[0] == doctest::Approx(1.0));
  CHECK(ch.up[1] == doctest::Approx(0.5));
  CHECK(ch.up[2] == 0.0);
  CHECK(ch.down[0] == 0.0);
  CHECK(ch.down[1] == doctest::Approx(0.5));
  CHECK(ch.down[2] == doctest::Approx(1.0));

  std::vector<double> f = {0.0, 1.0, 3.0};
  // sum over up-edges of min(p(n), p(n+1)) (f(n+1)-f(n))^2:
  // 0.25*1 + 0.25*4 = 1.25
  CHECK(ch.dirichlet(f) == doctest::Approx(1.25));
  EdgeForm ef = ch.edge_form();
  CHECK(ef.quad(f) == doctest::Approx(1.25));

  std::vector<double> holes = {0.5, 0.0, 0.5};
  CHECK_THROWS_AS(birth_death_generator(DiscreteMeasure::from_weights(holes)),
                  DomainError);
}

TEST_CASE("chain measure and reversibility") {
  RateFunction rate = linear_rate(1.0, 16);
  DiscreteMeasure g = gamma_distribution(3, 3, 9, rate);
  BirthDeathChain ch = birth_death_generator(g);
  DiscreteMeasure mu = ch.measure();
  for (std::size_t n = 0; n < g.size(); ++n)
    CHECK(mu.prob(n) == doctest::Approx(g.prob(n)).epsilon(1e-12));
  // Detailed balance of the Metropolis rates.
  for (int n = 0; n + 1 < ch.states(); ++n)
    CHECK(ch.pmf[static_cast<std::size_t>(n)] * ch.up[static_cast<std::size_t>(n)] ==
          doctest::Approx(ch.pmf[static_cast<std::size_t>(n) + 1] *
                          ch.down[static_cast<std::size_t>(n) + 1])
              .epsilon(1e-12));
}

TEST_CASE("hardy bracket sandwiches the measured LSI constant") {
  RateFunction rate = linear_rate(1.0, 40);
  DiscreteMeasure g = gamma_distribution(4, 4, 24, rate);
  BirthDeathChain ch = birth_death_generator(g);
  HardyBracket hb = hardy_lsi_bound(ch);
  CHECK(hb.functional > 0.0);
  CHECK(hb.lower == doctest::Approx(hb.functional / 20.0));
  CHECK(hb.upper == doctest::Approx(hb.functional * 20.0));

  LsiOptions o;
  o.restarts = 8;
  LsiResult res = lsi_constant(ch.edge_form(), ch.measure(), o);
  CHECK(res.estimate >= hb.lower);
  CHECK(res.estimate <= hb.upper);
}

TEST_CASE("conditional calculus against direct fiber sums") {
  RateFunction rate = staircase_rate(2, 8);
  Sector sec(Box::segment(4), 4);
  DiscreteMeasure nu = canonical_measure(sec, rate);
  SplitSector split(sec, rate, 2);
  auto f = random_positive(sec.size(), 101);
  auto g = random_positive(sec.size(), 102);

  std::vector<int> eta(4);
  for (int n = 0; n <= 4; ++n) {
    // Direct conditional mean, covariance, entropy on the fiber.
    double wsum = 0.0, mf = 0.0, mg = 0.0, mfg = 0.0, mflf = 0.0;
    for (std::uint64_t r = 0; r < sec.size(); ++r) {
      sec.unrank(r, eta);
      if (eta[0] + eta[1] != n) continue;
      double w = nu.prob(r);
      wsum += w;
      mf += w * f[r];
      mg += w * g[r];
      mfg += w * f[r] * g[r];
      mflf += w * f[r] * std::log(f[r]);
    }
    mf /= wsum;
    mg /= wsum;
    mfg /= wsum;
    mflf /= wsum;
    CHECK(split.conditional_expectation(f, n) == doctest::Approx(mf).epsilon(1e-11));
    CHECK(split.conditional_covariance(f, g, n) ==
          doctest::Approx(mfg - mf * mg).epsilon(1e-9));
    CHECK(split.conditional_entropy(f, n) ==
          doctest::Approx(mflf - mf * std::log(mf)).epsilon(1e-9));
    // gamma matches the fiber mass.
    CHECK(split.gamma().prob(static_cast<std::size_t>(n)) ==
          doctest::Approx(wsum).epsilon(1e-11));
  }
}

TEST_CASE("block entropies against grouped enumeration") {
  RateFunction rate = staircase_rate(2, 8);
  Sector sec(Box::segment(4), 4);
  DiscreteMeasure nu = canonical_measure(sec, rate);
  SplitSector split(sec, rate, 2);
  auto f = random_positive(sec.size(), 55);

  // Freeze the right block, take entropy over the left block, nu-average.
  auto grouped = [&](bool freeze_right) {
    std::map<std::vector<int>, std::vector<std::uint64_t>> groups;
    std::vector<int> eta(4);
    for (std::uint64_t r = 0; r < sec.size(); ++r) {
      sec.unrank(r, eta);
      std::vector<int> key = freeze_right
                                 ? std::vector<int>{eta[2], eta[3]}
                                 : std::vector<int>{eta[0], eta[1]};
      groups[key].push_back(r);
    }
    double acc = 0.0;
    for (const auto& [key, members] : groups) {
      double wsum = 0.0, mf = 0.0, mflf = 0.0;
      for (auto r : members) {
        double w = nu.prob(r);
        wsum += w;
        mf += w * f[r];
        mflf += w * f[r] * std::log(f[r]);
      }
      double ent = mflf / wsum - (mf / wsum) * std::log(mf / wsum);
      acc += wsum * ent;
    }
    return acc;
  };
  CHECK(split.mean_block_entropy_left(f) ==
        doctest::Approx(grouped(true)).epsilon(1e-9));
  CHECK(split.mean_block_entropy_right(f) ==
        doctest::Approx(grouped(false)).epsilon(1e-9));
}

TEST_CASE("within-fiber and cross-bond forms recompose the Dirichlet form") {
  RateFunction rate = staircase_rate(2, 10);
  Sector sec(Box::segment(4), 5);
  DiscreteMeasure nu = canonical_measure(sec, rate);
  SparseGenerator gen = assemble_generator(sec, rate);
  SplitSector split(sec, rate, 2);
  auto f = random_positive(sec.size(), 7);
  std::vector<double> sf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) sf[i] = std::sqrt(f[i]);

  double full = dirichlet_form(gen, nu, sf, sf);
  double sum = split.cross_bond_dirichlet(nu, sf, sf);
  for (int n = 0; n <= 5; ++n)
    sum += split.gamma().prob(static_cast<std::size_t>(n)) *
           split.conditional_dirichlet_within(sf, sf, n);
  CHECK(sum == doctest::Approx(full).epsilon(1e-10));
}

TEST_CASE("two flow routes reproduce the conditional-mean increment") {
  RateFunction rate = staircase_rate(2, 10);
  Sector sec(Box::segment(4), 5);
  SplitSector split(sec, rate, 2);
  auto f = random_positive(sec.size(), 31);
  for (int n = 1; n <= 5; ++n) {
    auto rep = split.gradient_representation(f, n);
    double scale = std::max(1.0, std::abs(rep.direct));
    CHECK(std::abs(rep.direct - rep.via_lower) / scale < 1e-9);
    CHECK(std::abs(rep.direct - rep.via_upper) / scale < 1e-9);
    auto parts = split.ab_split(f, n);
    CHECK(std::abs(parts.a + parts.b - rep.direct) / scale < 1e-9);
  }
  CHECK_THROWS_AS(split.gradient_representation(f, 0), DomainError);
  Sector uneven(Box::segment(3), 3);
  SplitSector us(uneven, rate, 1);
  auto fu = random_positive(uneven.size(), 32);
  CHECK_THROWS_AS(us.gradient_representation(fu, 1), DomainError);
}

TEST_CASE("independent particles: the covariance part vanishes") {
  RateFunction rate = linear_rate(1.0, 12);
  for (auto [sites, total] : {std::pair{2, 4}, {4, 6}}) {
    Sector sec(Box::segment(sites), total);
    SplitSector split(sec, rate, sites / 2);
    auto f = random_positive(sec.size(), 77 + static_cast<std::uint64_t>(sites));
    for (int n = 1; n <= total; ++n) {
      auto parts = split.ab_split(f, n);
      CHECK(std::abs(parts.b) <= 1e-10 * std::max(std::abs(parts.a), 1e-12));
    }
  }
}

TEST_CASE("fiber bookkeeping") {
  RateFunction rate = staircase_rate(2, 8);
  Sector sec(Box::segment(4), 4);
  SplitSector split(sec, rate, 2);
  std::uint64_t covered = 0;
  std::set<std::uint32_t> seen;
  for (int n = 0; n <= 4; ++n) {
    auto fs = split.fiber_states(n);
    // C(n+1,1) * C(4-n+1,1) states in fiber n for two 2-site blocks.
    CHECK(fs.size() == static_cast<std::size_t>((n + 1) * (5 - n)));
    covered += fs.size();
    for (auto s : fs) seen.insert(s);
  }
  CHECK(covered == sec.size());
  CHECK(seen.size() == sec.size());
}

TEST_CASE("diagnostics scan emits the advertised quantities") {
  RateFunction rate = staircase_rate(2, 12);
  std::vector<int> sites = {2, 4};
  std::vector<int> parts = {4};
  auto rows = diagnostics_scan(rate, sites, parts, 5, 99);
  REQUIRE(!rows.empty());
  std::set<std::string> names;
  for (const auto& r : rows) {
    names.insert(r.quantity);
    CHECK(std::isfinite(r.value));
  }
  CHECK(names.count("count_ratio_max"));
  CHECK(names.count("flow_bound_implied_const"));
  CHECK(names.count("cov_c_implied_const"));
  CHECK(names.count("cov_h_implied_const"));
  CHECK(names.count("mgf_c_implied_const"));
  CHECK(names.count("mgf_h_implied_const"));
}

}  // TEST_SUITE
