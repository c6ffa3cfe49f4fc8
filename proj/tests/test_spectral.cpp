#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "zrlab/generator.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/spectral.hpp"

using namespace zrlab;

namespace {

struct Setup {
  Sector sector;
  DiscreteMeasure nu;
  SparseGenerator gen;
  EdgeForm form;
  Setup(int sites, int particles, const RateFunction& rate)
      : sector(Box::segment(sites), particles),
        nu(canonical_measure(sector, rate)),
        gen(assemble_generator(sector, rate)),
        form(edge_form(gen, nu)) {}
};

double walk_gap(int sites) { return 2.0 * (1.0 - std::cos(M_PI / sites)); }

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("generator rows sum to zero and respect detailed balance") {
  RateFunction rate = staircase_rate(2, 10);
  Setup s(4, 6, rate);
  CHECK(row_sum_defect(s.gen) < 1e-13);
  CHECK(reversibility_defect(s.gen, s.nu) < 1e-12);
}

TEST_CASE("single particle on two sites: eigenvalues {0, -2}") {
  RateFunction rate = linear_rate(1.0, 4);
  Setup s(2, 1, rate);
  GapResult g = spectral_gap(s.form, s.nu);
  CHECK(g.gap == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(g.used_dense);
}

TEST_CASE("single particle on three sites: gap of the path walk") {
  RateFunction rate = linear_rate(1.0, 4);
  Setup s(3, 1, rate);
  GapResult g = spectral_gap(s.form, s.nu);
  CHECK(g.gap == doctest::Approx(1.0).epsilon(1e-10));  // 2(1-cos(pi/3))
}

TEST_CASE("independent particles: gap does not depend on N") {
  RateFunction rate = linear_rate(1.0, 16);
  double ref = walk_gap(3);
  for (int n : {1, 3, 5, 8}) {
    Setup s(3, n, rate);
    GapResult g = spectral_gap(s.form, s.nu);
    CHECK(g.gap == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("iterative path agrees with the dense path") {
  RateFunction rate = staircase_rate(2, 10);
  Setup s(4, 5, rate);  // 56 states
  GapOptions dense_opts;
  GapResult dense = spectral_gap(s.form, s.nu, dense_opts);
  REQUIRE(dense.used_dense);
  GapOptions iter_opts;
  iter_opts.dense_cutoff = 4;  // force Lanczos
  GapResult iter = spectral_gap(s.form, s.nu, iter_opts);
  CHECK_FALSE(iter.used_dense);
  CHECK(iter.gap == doctest::Approx(dense.gap).epsilon(1e-8));
}

TEST_CASE("gap witness attains the reported ratio") {
  RateFunction rate = staircase_rate(2, 10);
  Setup s(4, 4, rate);
  GapResult g = spectral_gap(s.form, s.nu);
  REQUIRE(g.witness.size() == s.sector.size());
  double num = s.form.quad(g.witness);
  double den = s.nu.variance(g.witness);
  REQUIRE(den > 0.0);
  CHECK(num / den == doctest::Approx(g.gap).epsilon(1e-7));
}

TEST_CASE("dirichlet form: edge list and CSR agree, Poincare holds") {
  RateFunction rate = staircase_rate(2, 12);
  Setup s(4, 6, rate);
  GapResult g = spectral_gap(s.form, s.nu);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::vector<double> f(s.sector.size()), h(s.sector.size());
  for (int t = 0; t < 20; ++t) {
    for (auto& v : f) v = gauss(rng);
    for (auto& v : h) v = gauss(rng);
    double e1 = dirichlet_form(s.gen, s.nu, f, h);
    double e2 = s.form.bilinear(f, h);
    CHECK(e1 == doctest::Approx(e2).epsilon(1e-10));
    CHECK(s.form.quad(f) >= g.gap * s.nu.variance(f) * (1.0 - 1e-9));
  }
}

TEST_CASE("independent particles on two sites: LSI constant is exactly 1") {
  // Symmetric Bernoulli marginals: the entropy-energy ratio is maximized in
  // the near-constant limit and equals 2/gap = 1, uniformly in N.
  RateFunction rate = linear_rate(1.0, 8);
  for (int n : {1, 2, 3}) {
    Setup s(2, n, rate);
    LsiOptions o;
    o.restarts = 8;
    LsiResult res = lsi_constant(s.form, s.nu, o);
    CHECK_FALSE(res.degenerate);
    CHECK(res.estimate == doctest::Approx(1.0).epsilon(2e-4));
    CHECK(res.certified_lower <= res.estimate + 1e-12);
  }
}

TEST_CASE("LSI estimate dominates the spectral two-sided kernel bound") {
  // Ent(g^2) <= s E(g,g) forces s >= 2/gap (expand around constants).
  RateFunction rate = staircase_rate(2, 10);
  Setup s(3, 5, rate);
  GapResult g = spectral_gap(s.form, s.nu);
  LsiOptions o;
  o.restarts = 8;
  LsiResult res = lsi_constant(s.form, s.nu, o, &g.witness);
  CHECK(res.estimate >= 2.0 / g.gap * (1.0 - 1e-6));
  // The witness reproduces the estimate through the public ratio.
  REQUIRE(res.witness.size() == s.sector.size());
  CHECK(lsi_ratio(s.form, s.nu, res.witness) ==
        doctest::Approx(res.estimate).epsilon(1e-9));
}

TEST_CASE("LSI optimizer is deterministic for a fixed seed") {
  RateFunction rate = staircase_rate(2, 10);
  Setup s(3, 4, rate);
  LsiOptions o;
  o.restarts = 6;
  LsiResult a = lsi_constant(s.form, s.nu, o);
  LsiResult b = lsi_constant(s.form, s.nu, o);
  CHECK(a.estimate == b.estimate);
  CHECK(a.best_restart == b.best_restart);
}

}  // TEST_SUITE
