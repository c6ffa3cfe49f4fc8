#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"

namespace zrlab {

// Jump generator on a sector, CSR over off-diagonal transitions
// eta -> eta - delta_x + delta_y at rate c(eta_x) for each neighbour pair
// (x, y). Diagonal entries hold the negative row sums.
struct SparseGenerator {
  std::uint64_t n_states = 0;
  std::vector<std::uint64_t> row_ptr;   // size n_states + 1
  std::vector<std::uint32_t> col;       // target state per transition
  std::vector<double> rate;             // jump rate per transition
  std::vector<double> diagonal;         // -sum of row rates

  // y = L f (dense apply).
  void apply(std::span<const double> f, std::span<double> out) const;
};

SparseGenerator assemble_generator(const Sector& sector, const RateFunction& rate);

// E(f, g) = -nu[f * Lg] = 1/2 sum over transitions nu(eta) c(eta_x)
//           (f(eta^xy) - f(eta)) (g(eta^xy) - g(eta)).
double dirichlet_form(const SparseGenerator& gen, const DiscreteMeasure& nu,
                      std::span<const double> f, std::span<const double> g);

// Undirected edge list with weights; E(f,f) = sum_e w_e (f_i - f_j)^2.
// This is the common carrier for the sector generator (w = nu_i * rate_ij,
// one entry per unordered pair) and for birth-death chains.
struct EdgeForm {
  std::uint64_t n = 0;
  std::vector<std::uint32_t> i, j;
  std::vector<double> w;

  double quad(std::span<const double> f) const;
  double bilinear(std::span<const double> f, std::span<const double> g) const;
};

// Requires detailed balance of (gen, nu); the weight of each unordered pair
// is nu_i * rate(i->j) (== nu_j * rate(j->i)).
EdgeForm edge_form(const SparseGenerator& gen, const DiscreteMeasure& nu);

// Largest relative detailed-balance defect over transitions, computed in log
// space: |exp(log(nu_i r_ij) - log(nu_j r_ji)) - 1|.
double reversibility_defect(const SparseGenerator& gen, const DiscreteMeasure& nu);

// Largest |row sum| / max row rate over states (0 for empty rows).
double row_sum_defect(const SparseGenerator& gen);

}  // namespace zrlab
