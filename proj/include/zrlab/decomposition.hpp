#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zrlab/generator.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"

namespace zrlab {

// Law of the left-block particle count under the canonical measure:
// gamma(n) proportional to Z_{sites1}(n) * Z_{sites2}(N - n), where Z_m(k) is
// the m-site partition sum. Never computed by fiber enumeration.
DiscreteMeasure gamma_distribution(int sites1, int sites2, int total,
                                   const RateFunction& rate);

// Metropolis birth-death chain on {0..N} reversible for pmf:
// up(n) = min(pmf(n+1)/pmf(n), 1), down(n) = min(pmf(n-1)/pmf(n), 1).
struct BirthDeathChain {
  std::vector<double> pmf;
  std::vector<double> up;    // up[n] = rate n -> n+1 (last entry 0)
  std::vector<double> down;  // down[n] = rate n -> n-1 (entry 0 is 0)

  int states() const { return static_cast<int>(pmf.size()); }
  // Dirichlet form sum_{n>=1} min(pmf(n), pmf(n-1)) (f(n)-f(n-1))^2.
  double dirichlet(std::span<const double> f) const;
  EdgeForm edge_form() const;
  DiscreteMeasure measure() const;
};

// Throws DomainError("disconnected support...") when pmf vanishes strictly
// inside its support.
BirthDeathChain birth_death_generator(const DiscreteMeasure& pmf);

// Two-sided bracket on the chain's LSI constant from the median-split Hardy
// functional; `bracket_factor` is the universal constant (default 20).
struct HardyBracket {
  double lower = 0.0;
  double upper = 0.0;
  double functional = 0.0;  // the raw median-split Hardy value
};
HardyBracket hardy_lsi_bound(const BirthDeathChain& chain, double bracket_factor = 20.0);

// Precomputed split of a segment sector into left/right halves, with fiber
// enumeration (product order) and everything the conditional calculus needs.
class SplitSector {
 public:
  // sites1 + sites2 must equal sector.sites(); sites laid out left block then
  // right block along the segment.
  SplitSector(const Sector& sector, const RateFunction& rate, int sites1);

  const Sector& full() const { return full_; }
  const RateFunction& rate() const { return rate_; }
  int sites1() const { return sites1_; }
  int sites2() const { return sites2_; }
  int total() const { return full_.particles(); }
  const DiscreteMeasure& gamma() const { return gamma_; }

  // nu[f | count(left block) = n].
  double conditional_expectation(std::span<const double> f, int n) const;
  // Conditional covariance nu[f, g | n].
  double conditional_covariance(std::span<const double> f, std::span<const double> g, int n) const;
  // Conditional entropy Ent_{nu[.|n]}(f).
  double conditional_entropy(std::span<const double> f, int n) const;

  // nu-average over fibers of the per-block tensorized entropies:
  // nu[ Ent_{left block, right part frozen}(f) ] and same for the right block.
  double mean_block_entropy_left(std::span<const double> f) const;
  double mean_block_entropy_right(std::span<const double> f) const;

  // Within-half Dirichlet form of the conditional product measure at level n
  // applied to sqrt-interactions: 1/2 sum over bonds inside each half of
  // nu[ c(eta_x) (f(eta^xy) - f(eta))(g(eta^xy) - g(eta)) | n ].
  double conditional_dirichlet_within(std::span<const double> f, std::span<const double> g,
                                      int n) const;
  // Cross-bond contribution of the full form (bonds joining the halves).
  double cross_bond_dirichlet(const DiscreteMeasure& nu, std::span<const double> f,
                              std::span<const double> g) const;

  struct GradientRep {
    double direct = 0.0;     // nu[f|n] - nu[f|n-1]
    double via_lower = 0.0;  // flow form conditioned at n-1 (left-entering jumps)
    double via_upper = 0.0;  // mirrored form conditioned at n (right-entering jumps)
  };
  // Requires equal halves (sites1 == sites2); 1 <= n <= N.
  GradientRep gradient_representation(std::span<const double> f, int n) const;

  struct AbParts {
    double a = 0.0;  // conditional-average part
    double b = 0.0;  // conditional-covariance part
  };
  // Branch at n >= N/2 uses the form at n-1, below uses the mirrored form at
  // n; ties go to the first branch. a + b equals the direct gradient.
  AbParts ab_split(std::span<const double> f, int n) const;

  // Number of states in fiber n and the global index of each fiber state.
  std::span<const std::uint32_t> fiber_states(int n) const;

 private:
  struct Fiber {
    std::uint64_t size1 = 0, size2 = 0;
    std::vector<std::uint32_t> full_index;  // size1 * size2, product order
    std::vector<double> w1, w2;             // block weights, each sums to 1
  };
  struct FlowTerms {
    // For each fiber state and each (x in left, y in right) pair with a
    // particle available to move: contribution weight h*c and target index.
    std::vector<std::uint32_t> src;  // position inside the fiber
    std::vector<std::uint32_t> tgt;  // full-sector index after the move
    std::vector<double> hc;          // h(eta_x) c(eta_y) (or mirrored)
  };

  const Fiber& fiber(int n) const { return fibers_[static_cast<std::size_t>(n)]; }
  double fiber_weight(const Fiber& fb, std::uint64_t k) const {
    return fb.w1[static_cast<std::size_t>(k / fb.size2)] *
           fb.w2[static_cast<std::size_t>(k % fb.size2)];
  }
  const FlowTerms& flow_into_left(int n) const;   // jumps y->x evaluated on fiber n
  const FlowTerms& flow_into_right(int n) const;  // jumps x->y evaluated on fiber n
  std::vector<double> flow_observable(const FlowTerms& terms, int n) const;

  Sector full_;
  RateFunction rate_;
  int sites1_ = 0, sites2_ = 0;
  DiscreteMeasure gamma_;
  std::vector<Fiber> fibers_;
  mutable std::vector<std::optional<FlowTerms>> into_left_, into_right_;
};

// One diagnostics row; `quantity` names the measured object.
struct DiagnosticsRow {
  std::string quantity;
  std::string rate;
  int sites = 0;
  int particles = 0;
  int n = -1;  // fiber index where applicable, -1 otherwise
  double value = 0.0;
};

// Scans the ratio bound constant, the flow-part strength and the implied
// moment-inequality constants over a grid of (sites, particles) cells.
std::vector<DiagnosticsRow> diagnostics_scan(const RateFunction& rate,
                                             std::span<const int> sites_grid,
                                             std::span<const int> particle_grid,
                                             int functions_per_cell, std::uint64_t seed);

}  // namespace zrlab
