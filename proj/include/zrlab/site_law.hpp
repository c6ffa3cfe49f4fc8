#pragma once

#include <vector>

#include "zrlab/rates.hpp"

namespace zrlab {

// Single-site equilibrium at fugacity alpha: p(k) proportional to
// alpha^k / c(k)!. Truncated at k_cut with a certified tail bound; the beyond-
// table remainder is controlled through the envelope c(k) >= k/A0.
struct SiteLaw {
  double alpha = 0.0;
  double log_z = 0.0;               // log of the table partition sum
  std::vector<double> pmf;          // k = 0..k_cut
  double tail_bound = 0.0;          // certified upper bound on P(K > k_cut)
  double mean = 0.0;                // from the tabulated law
  double variance = 0.0;
  double beyond_table = 0.0;        // certified bound on the un-tabulated mass

  int k_cut() const { return static_cast<int>(pmf.size()) - 1; }
};

// Builds the law, choosing the smallest k_cut with tail <= tail_tol.
// Throws TableError when the table cannot certify that tolerance.
SiteLaw grand_canonical_site_law(const RateFunction& rate, double alpha,
                                 double tail_tol = 1e-14);

// Solves mean(alpha) = rho by bisection on the bracket [rho/A0, rho*A0];
// |mean - rho| <= tol * max(rho, 1). rho = 0 gives alpha = 0.
double invert_fugacity(const RateFunction& rate, double rho, double tol = 1e-12);

// One row of the density scan: alpha(rho), sigma^2(rho) and the normalized
// ratios that stay bounded away from 0 and infinity for admissible rates.
struct DensityScanRow {
  double rho = 0.0;
  double alpha = 0.0;
  double sigma2 = 0.0;
  double alpha_over_rho = 0.0;
  double sigma2_over_rho = 0.0;
};

// Log-spaced scan over [rho_min, rho_max]; used by reports and property tests.
std::vector<DensityScanRow> density_scan(const RateFunction& rate, double rho_min,
                                         double rho_max, int points);

}  // namespace zrlab
