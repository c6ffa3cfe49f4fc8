#include "zrlab/sector.hpp"

#include <string>

#include "zrlab/errors.hpp"

namespace zrlab {

namespace {
constexpr std::uint64_t kSat = std::uint64_t(1) << 63;

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  if (s >= kSat || s < a) return kSat;
  return s;
}
}  // namespace

Sector::Sector(Box box, int particles, std::uint64_t size_cap)
    : box_(std::move(box)), particles_(particles) {
  if (particles < 0) throw DomainError("particle number must be >= 0");
  int sites = box_.size();
  // table_[k][m] = # weak compositions of m into k parts (Pascal recursion).
  table_.assign(static_cast<std::size_t>(sites) + 1,
                std::vector<std::uint64_t>(static_cast<std::size_t>(particles) + 1, 0));
  for (int m = 0; m <= particles; ++m) table_[0][m] = (m == 0) ? 1 : 0;
  for (int k = 1; k <= sites; ++k) {
    table_[k][0] = 1;
    for (int m = 1; m <= particles; ++m)
      table_[k][m] = sat_add(table_[k][m - 1], table_[k - 1][m]);
  }
  size_ = table_[static_cast<std::size_t>(sites)][static_cast<std::size_t>(particles)];
  if (size_ > size_cap) {
    std::string msg = "sector too large: " +
                      (size_ >= kSat ? std::string(">= 2^63") : std::to_string(size_)) +
                      " states exceed the cap of " + std::to_string(size_cap);
    throw CapError(msg, size_);
  }
}

std::uint64_t Sector::compositions(int parts, int total) const {
  if (parts < 0 || total < 0 || parts > box_.size() || total > particles_) return 0;
  return table_[static_cast<std::size_t>(parts)][static_cast<std::size_t>(total)];
}

std::uint64_t Sector::rank(std::span<const int> eta) const {
  int sites = box_.size();
  if (static_cast<int>(eta.size()) != sites)
    throw DomainError("configuration length does not match the box");
  std::uint64_t r = 0;
  int m = 0;  // running total over sites 0..x
  for (int x = 0; x < sites; ++x) m += eta[static_cast<std::size_t>(x)];
  if (m != particles_)
    throw DomainError("configuration has " + std::to_string(m) + " particles, sector expects " +
                      std::to_string(particles_));
  // Colex rank: positions x = sites-1 .. 1 contribute the count of
  // compositions of the running total with a smaller value at x, which
  // telescopes to table
  for (int x = sites - 1; x >= 1; --x) {
    // # compositions of m into x+1 parts with last part < eta[x]:
    //   table_[x+1][m] - table_[x+1][m - eta[x]]
    r += table_[static_cast<std::size_t>(x) + 1][static_cast<std::size_t>(m)] -
         table_[static_cast<std::size_t>(x) + 1][static_cast<std::size_t>(m - eta[x])];
    m -= eta[static_cast<std::size_t>(x)];
  }
  return r;
}

void Sector::unrank(std::uint64_t r, std::span<int> eta_out) const {
  int sites = box_.size();
  if (static_cast<int>(eta_out.size()) != sites)
    throw DomainError("output length does not match the box");
  if (r >= size_) throw DomainError("rank out of range");
  int m = particles_;
  for (int x = sites - 1; x >= 1; --x) {
    const auto& row = table_[static_cast<std::size_t>(x) + 1];
    std::uint64_t base = row[static_cast<std::size_t>(m)];
    // contribution(v) = base - row[m - v] is nondecreasing in v; pick the
    // largest v with contribution(v) <= r.
    int lo = 0, hi = m;
    while (lo < hi) {
      int mid = (lo + hi + 1) / 2;
      if (base - row[static_cast<std::size_t>(m - mid)] <= r)
        lo = mid;
      else
        hi = mid - 1;
    }
    eta_out[static_cast<std::size_t>(x)] = lo;
    r -= base - row[static_cast<std::size_t>(m - lo)];
    m -= lo;
  }
  eta_out[0] = m;
}

std::vector<int> Sector::unrank(std::uint64_t r) const {
  std::vector<int> eta(static_cast<std::size_t>(box_.size()));
  unrank(r, eta);
  return eta;
}

std::uint64_t Sector::rank_after_move(std::span<const int> eta, std::uint64_t r, int from,
                                      int to) const {
  // Only the colex terms for positions in [min(from,to)+? , max(from,to)]
  // change. At our scales a plain re-rank is cheap and obviously right.
  (void)r;
  if (from == to) return rank(eta);
  if (eta[static_cast<std::size_t>(from)] <= 0)
    throw DomainError("cannot move a particle from an empty site");
  std::vector<int> moved(eta.begin(), eta.end());
  --moved[static_cast<std::size_t>(from)];
  ++moved[static_cast<std::size_t>(to)];
  return rank(moved);
}

}  // namespace zrlab
