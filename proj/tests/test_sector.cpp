#include <doctest.h>

#include <vector>

#include "zrlab/errors.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/sector.hpp"

using namespace zrlab;

TEST_SUITE("sector") {

TEST_CASE("segment boxes expose path neighbourhoods") {
  Box b = Box::segment(4);
  CHECK(b.size() == 4);
  CHECK(b.dimension() == 1);
  CHECK(b.degree(0) == 1);
  CHECK(b.degree(1) == 2);
  CHECK(b.degree(3) == 1);
  auto nb = b.neighbors(2);
  REQUIRE(nb.size() == 2);
  CHECK(((nb[0] == 1 && nb[1] == 3) || (nb[0] == 3 && nb[1] == 1)));
}

TEST_CASE("square boxes have interior degree 4") {
  Box b = Box::cube(2, 2);  // lattice points of [0,2]^2
  CHECK(b.size() == 9);
  CHECK(b.dimension() == 2);
  int center = -1;
  for (int s = 0; s < b.size(); ++s)
    if (b.coords(s)[0] == 1 && b.coords(s)[1] == 1) center = s;
  REQUIRE(center >= 0);
  CHECK(b.degree(center) == 4);
  CHECK(b.neighbors(center).size() == 4);
}

TEST_CASE("two sites, two particles: the documented colex order") {
  Sector s(Box::segment(2), 2);
  REQUIRE(s.size() == 3);
  CHECK(s.unrank(0) == std::vector<int>{2, 0});
  CHECK(s.unrank(1) == std::vector<int>{1, 1});
  CHECK(s.unrank(2) == std::vector<int>{0, 2});
}

TEST_CASE("sizes match weak composition counts") {
  CHECK(Sector(Box::segment(3), 3).size() == 10);   // C(5,2)
  CHECK(Sector(Box::segment(4), 2).size() == 10);   // C(5,3)
  CHECK(Sector(Box::segment(6), 10).size() == 3003);  // C(15,5)
  CHECK(Sector(Box::segment(5), 0).size() == 1);
}

TEST_CASE("rank and unrank invert each other") {
  Sector s(Box::segment(4), 5);
  std::vector<int> eta(4);
  for (std::uint64_t r = 0; r < s.size(); ++r) {
    s.unrank(r, eta);
    int tot = 0;
    for (int v : eta) {
      CHECK(v >= 0);
      tot += v;
    }
    CHECK(tot == 5);
    CHECK(s.rank(eta) == r);
  }
}

TEST_CASE("rank_after_move agrees with rank of the mutated state") {
  Sector s(Box::segment(4), 3);
  std::vector<int> eta(4), moved(4);
  for (std::uint64_t r = 0; r < s.size(); ++r) {
    s.unrank(r, eta);
    for (int x = 0; x < 4; ++x) {
      if (eta[static_cast<std::size_t>(x)] == 0) continue;
      for (int y = 0; y < 4; ++y) {
        if (y == x) continue;
        moved = eta;
        --moved[static_cast<std::size_t>(x)];
        ++moved[static_cast<std::size_t>(y)];
        CHECK(s.rank_after_move(eta, r, x, y) == s.rank(moved));
      }
    }
  }
}

TEST_CASE("composition table matches binomials") {
  Sector s(Box::segment(4), 6);
  CHECK(s.compositions(4, 3) == 20);  // C(6,3)
  CHECK(s.compositions(1, 6) == 1);
  CHECK(s.compositions(2, 6) == 7);
}

TEST_CASE("the size cap trips as a CapError") {
  try {
    Sector s(Box::segment(10), 10, 100);
    FAIL("expected CapError");
  } catch (const CapError& e) {
    CHECK(e.count > 100);
  }
}

}  // TEST_SUITE
