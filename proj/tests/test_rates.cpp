#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "zrlab/errors.hpp"
#include "zrlab/rates.hpp"

using namespace zrlab;

TEST_SUITE("rates") {

TEST_CASE("linear family: values and structural constants") {
  RateFunction r = linear_rate(1.0, 8);
  CHECK(r.n_max() == 8);
  for (int n = 0; n <= 8; ++n) CHECK(r.at(n) == static_cast<double>(n));
  CHECK(r.lipschitz_a1 == doctest::Approx(1.0));
  CHECK(r.envelope_a0 == doctest::Approx(1.0));
  REQUIRE(r.monotone_k0.has_value());
  CHECK(*r.monotone_k0 == 1);
  CHECK(*r.monotone_a2 == doctest::Approx(1.0));
  // h(n) = (n+1)/c(n+1) is identically 1 here.
  for (int n = 0; n <= 7; ++n) CHECK(r.h(n) == doctest::Approx(1.0));
  CHECK(r.label == "linear:1");
}

TEST_CASE("staircase family: plateaus of width `step`") {
  RateFunction r = staircase_rate(2, 9);
  // c = 0,2,2,4,4,6,6,8,8,10
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(1) == 2.0);
  CHECK(r.at(2) == 2.0);
  CHECK(r.at(3) == 4.0);
  CHECK(r.at(4) == 4.0);
  CHECK(r.at(9) == 10.0);
  CHECK(r.lipschitz_a1 == doctest::Approx(2.0));
  CHECK(r.envelope_a0 == doctest::Approx(2.0));
  REQUIRE(r.monotone_k0.has_value());
  CHECK(*r.monotone_k0 == 2);
  CHECK(*r.monotone_a2 == doctest::Approx(2.0));
  CHECK(r.h(0) == doctest::Approx(0.5));
  CHECK(r.h(1) == doctest::Approx(1.0));
  CHECK(r.h(2) == doctest::Approx(0.75));
}

TEST_CASE("envelope constant covers both directions") {
  // c(n) = 3n has a0 = 3 from c/n; c(n) = n/3 would give a0 = 3 from n/c.
  RateFunction up = linear_rate(3.0, 5);
  CHECK(up.envelope_a0 == doctest::Approx(3.0));
  RateFunction down = linear_rate(1.0 / 3.0, 5);
  CHECK(down.envelope_a0 == doctest::Approx(3.0));
}

TEST_CASE("validation rejects malformed tables") {
  CHECK_THROWS_AS(validate_rate_function({}, "x"), DomainError);
  CHECK_THROWS_AS(validate_rate_function({1.0, 2.0}, "x"), DomainError);
  CHECK_THROWS_AS(validate_rate_function({0.0, -1.0}, "x"), DomainError);
  CHECK_THROWS_AS(validate_rate_function({0.0, 0.0}, "x"), DomainError);
  CHECK_THROWS_AS(linear_rate(0.0, 4), DomainError);
  CHECK_THROWS_AS(staircase_rate(0, 4), DomainError);
}

TEST_CASE("table access beyond the cut throws") {
  RateFunction r = linear_rate(1.0, 4);
  CHECK_THROWS_AS(r.at(5), TableError);
  CHECK_THROWS_AS(r.at(-1), TableError);
  CHECK_THROWS_AS(r.log_factorial(5), TableError);
}

TEST_CASE("interpolated evaluation clamps at the table end") {
  RateFunction r = linear_rate(1.0, 6);
  CHECK(r.at_real(2.5) == doctest::Approx(2.5));
  CHECK(r.at_real(0.0) == doctest::Approx(0.0));
  CHECK(r.at_real(100.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(r.at_real(-0.1), DomainError);
}

TEST_CASE("log factorial accumulates log c") {
  RateFunction r = staircase_rate(2, 4);
  CHECK(r.log_factorial(0) == doctest::Approx(0.0));
  CHECK(r.log_factorial(1) == doctest::Approx(std::log(2.0)));
  CHECK(r.log_factorial(3) == doctest::Approx(std::log(2.0 * 2.0 * 4.0)));
}

TEST_CASE("spec strings parse into the right families") {
  CHECK(rate_from_spec("linear", 4).label == "linear:1");
  CHECK(rate_from_spec("linear:2.5", 4).at(2) == doctest::Approx(5.0));
  CHECK(rate_from_spec("constant", 4).at(3) == doctest::Approx(1.0));
  CHECK(rate_from_spec("staircase", 4).at(1) == doctest::Approx(2.0));
  CHECK(rate_from_spec("staircase:3", 4).at(2) == doctest::Approx(3.0));
  CHECK_THROWS_AS(rate_from_spec("cubic", 4), UsageError);
  CHECK_THROWS_AS(rate_from_spec("table:", 4), UsageError);
}

TEST_CASE("rate tables roundtrip through files") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "zrlab_rate_roundtrip.txt";
  RateFunction r = staircase_rate(2, 6);
  save_rate_table(r, p.string());
  RateFunction back = load_rate_table(p.string());
  REQUIRE(back.n_max() == r.n_max());
  for (int n = 0; n <= r.n_max(); ++n) CHECK(back.at(n) == r.at(n));
  fs::remove(p);
  CHECK_THROWS_AS(load_rate_table("/nonexistent/zr.txt"), UsageError);
}

}  // TEST_SUITE
