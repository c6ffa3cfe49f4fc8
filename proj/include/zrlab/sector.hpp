#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zrlab/lattice.hpp"

namespace zrlab {

// Fixed-particle-number state space: weak compositions of `particles` over the
// sites of a box, indexed in colexicographic order (last site varies slowest;
// for 2 sites and 2 particles the order is (2,0), (1,1), (0,2)).
class Sector {
 public:
  static constexpr std::uint64_t kDefaultCap = 5'000'000;

  Sector(Box box, int particles, std::uint64_t size_cap = kDefaultCap);

  const Box& box() const { return box_; }
  int sites() const { return box_.size(); }
  int particles() const { return particles_; }
  std::uint64_t size() const { return size_; }

  std::uint64_t rank(std::span<const int> eta) const;
  void unrank(std::uint64_t r, std::span<int> eta_out) const;
  std::vector<int> unrank(std::uint64_t r) const;

  // Rank after moving one particle from site `from` to site `to`; `eta` is the
  // current configuration (not modified). Requires eta[from] > 0.
  std::uint64_t rank_after_move(std::span<const int> eta, std::uint64_t r, int from, int to) const;

  // compositions(k, m) = number of weak compositions of m into k parts,
  // saturating at 2^63 to keep cap arithmetic safe.
  std::uint64_t compositions(int parts, int total) const;

 private:
  Box box_;
  int particles_ = 0;
  std::uint64_t size_ = 0;
  // table_[k][m] = compositions of m into k parts, k <= sites, m <= particles.
  std::vector<std::vector<std::uint64_t>> table_;
};

}  // namespace zrlab
