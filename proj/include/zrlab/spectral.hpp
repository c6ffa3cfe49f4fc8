#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "zrlab/generator.hpp"
#include "zrlab/measure.hpp"

namespace zrlab {

struct GapResult {
  double gap = 0.0;
  std::vector<double> witness;  // eigenfunction of the generator at -gap
  bool used_dense = false;
  int iterations = 0;
};

struct GapOptions {
  double tol = 1e-10;            // relative eigenvalue tolerance
  std::uint64_t dense_cutoff = 2000;  // dense solve below, Lanczos above
  int max_subspace = 320;
  int max_restarts = 60;
  std::uint64_t seed = 20240901;
};

// Smallest nonzero eigenvalue of -L via the symmetrized operator
// D^{1/2} (-L) D^{-1/2} with the constant mode deflated. Requires n >= 2 and
// an irreducible chain (gap > 0 is not checked, just reported).
GapResult spectral_gap(const EdgeForm& form, const DiscreteMeasure& nu,
                       const GapOptions& opts = {});
GapResult spectral_gap(const SparseGenerator& gen, const DiscreteMeasure& nu,
                       const GapOptions& opts = {});

struct LsiOptions {
  std::uint64_t seed = 20240901;
  int restarts = 32;        // random restarts, plus structured starts
  int max_iters = 5000;
  double grad_tol = 1e-9;   // projected-gradient norm stopping rule
  int threads = 1;
};

struct LsiResult {
  double certified_lower = 0.0;  // best ratio actually evaluated
  double estimate = 0.0;         // best stationary value (>= certified_lower)
  std::vector<double> witness;   // g attaining `estimate`, nu[g^2] = 1
  bool degenerate = false;       // no non-constant ascent direction was found
  int best_restart = -1;
};

// Maximizes Ent(g^2) / E(g, g) over nu[g^2] = 1 by projected gradient ascent
// with seeded restarts (structured starts: gap witness and single-state
// indicators). Deterministic for a fixed seed, independent of thread count:
// restart results are reduced in restart-index order.
LsiResult lsi_constant(const EdgeForm& form, const DiscreteMeasure& nu,
                       const LsiOptions& opts = {},
                       const std::vector<double>* gap_witness = nullptr);
LsiResult lsi_constant(const SparseGenerator& gen, const DiscreteMeasure& nu,
                       const LsiOptions& opts = {});

// Ratio Ent(g^2)/E(g,g) for a given g (used for witness checks).
double lsi_ratio(const EdgeForm& form, const DiscreteMeasure& nu,
                 std::span<const double> g);

}  // namespace zrlab
