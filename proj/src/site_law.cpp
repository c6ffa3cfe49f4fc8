#include "zrlab/site_law.hpp"

#include <cmath>
#include <limits>

#include "zrlab/errors.hpp"
#include "zrlab/logsum.hpp"

namespace zrlab {

SiteLaw grand_canonical_site_law(const RateFunction& rate, double alpha, double tail_tol) {
  if (alpha < 0.0) throw DomainError("fugacity must be >= 0");
  if (!(tail_tol > 0.0)) throw DomainError("tail tolerance must be > 0");

  SiteLaw law;
  law.alpha = alpha;
  if (alpha == 0.0) {
    law.pmf = {1.0};
    law.log_z = 0.0;
    law.tail_bound = 0.0;
    law.mean = 0.0;
    law.variance = 0.0;
    return law;
  }

  int K = rate.n_max();
  double log_alpha = std::log(alpha);
  std::vector<double> lw(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) lw[static_cast<std::size_t>(k)] = k * log_alpha - rate.log_factorial(k);

  // Beyond-table remainder: terms after K shrink by at least a0*alpha/(K+1)
  // per step because c(k) >= k/a0 is certified on the table and assumed to
  // persist. Geometric bound requires that ratio < 1.
  double q = alpha * rate.envelope_a0 / (K + 1);
  if (!(q < 0.995))
    throw TableError("rate table too short to certify the tail at alpha=" +
                     std::to_string(alpha) + " (extend the table beyond n_max=" +
                     std::to_string(K) + ")");
  double log_beyond = lw[static_cast<std::size_t>(K)] + std::log(q) - std::log1p(-q);

  double log_z = log_sum_exp(lw);
  law.log_z = log_z;
  law.beyond_table = std::exp(log_beyond - log_z);
  if (law.beyond_table > tail_tol)
    throw TableError("rate table too short: un-tabulated mass " +
                     std::to_string(law.beyond_table) + " exceeds tail_tol");

  // Suffix mass above each candidate cut (log space, stable backward sweep).
  std::vector<double> log_suffix(static_cast<std::size_t>(K) + 2, kNegInf);
  log_suffix[static_cast<std::size_t>(K) + 1] = log_beyond;
  for (int k = K; k >= 1; --k)
    log_suffix[static_cast<std::size_t>(k)] =
        log_add(log_suffix[static_cast<std::size_t>(k) + 1], lw[static_cast<std::size_t>(k)]);

  int k_cut = K;
  for (int k = 0; k <= K; ++k) {
    if (std::exp(log_suffix[static_cast<std::size_t>(k) + 1] - log_z) <= tail_tol) {
      k_cut = k;
      break;
    }
  }
  law.tail_bound = std::exp(log_suffix[static_cast<std::size_t>(k_cut) + 1] - log_z);

  law.pmf.resize(static_cast<std::size_t>(k_cut) + 1);
  for (int k = 0; k <= k_cut; ++k)
    law.pmf[static_cast<std::size_t>(k)] = std::exp(lw[static_cast<std::size_t>(k)] - log_z);

  // Moments from the full table (tighter than the exported cut).
  long double m1 = 0.0L, m2 = 0.0L;
  for (int k = 0; k <= K; ++k) {
    long double p = std::exp((long double)(lw[static_cast<std::size_t>(k)] - log_z));
    m1 += p * k;
    m2 += p * k * k;
  }
  law.mean = (double)m1;
  law.variance = (double)(m2 - m1 * m1);
  return law;
}

double invert_fugacity(const RateFunction& rate, double rho, double tol) {
  if (rho < 0.0) throw DomainError("density must be >= 0");
  if (!(tol > 0.0)) throw DomainError("tolerance must be > 0");
  if (rho == 0.0) return 0.0;

  // mean(alpha) is strictly increasing; c(k) ~ k/A0..A0*k brackets the mean
  // between alpha/A0 and alpha*A0, so alpha lies in [rho/A0, rho*A0]. For
  // bounded rates the upper end can sit past the table's certifiable range
  // (or past the radius of convergence); since certifiability fails only for
  // large alpha, an uncertifiable point is safely treated as mean = +inf.
  double a0 = rate.envelope_a0;
  double lo = rho / a0, hi = rho * a0;
  double tail_tol = std::min(1e-14, tol * 1e-3);
  auto mean_at = [&](double alpha) -> double {
    try {
      return grand_canonical_site_law(rate, alpha, tail_tol).mean;
    } catch (const TableError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double target_err = tol * std::max(rho, 1.0);
  double m_lo = mean_at(lo), m_hi = mean_at(hi);
  if (!std::isfinite(m_lo) || m_lo > rho + target_err || m_hi < rho - target_err)
    throw TableError("fugacity bracket failed; rate table too short for rho=" +
                     std::to_string(rho));
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double m = mean_at(mid);
    if (std::abs(m - rho) <= target_err) return mid;
    if (m < rho)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * hi) break;
  }
  double alpha = 0.5 * (lo + hi);
  if (std::abs(mean_at(alpha) - rho) > target_err)
    throw ConvergenceError("fugacity inversion did not reach tolerance at rho=" +
                           std::to_string(rho));
  return alpha;
}

std::vector<DensityScanRow> density_scan(const RateFunction& rate, double rho_min,
                                         double rho_max, int points) {
  if (!(rho_min > 0.0) || !(rho_max >= rho_min)) throw DomainError("bad density range");
  if (points < 2) throw DomainError("density scan needs at least two points");
  std::vector<DensityScanRow> rows;
  rows.reserve(static_cast<std::size_t>(points));
  double lmin = std::log(rho_min), lmax = std::log(rho_max);
  for (int i = 0; i < points; ++i) {
    double rho = std::exp(lmin + (lmax - lmin) * i / (points - 1));
    DensityScanRow row;
    row.rho = rho;
    row.alpha = invert_fugacity(rate, rho, 1e-12);
    SiteLaw law = grand_canonical_site_law(rate, row.alpha);
    row.sigma2 = law.variance;
    row.alpha_over_rho = row.alpha / rho;
    row.sigma2_over_rho = row.sigma2 / rho;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace zrlab
