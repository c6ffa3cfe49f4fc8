#include "zrlab/ensembles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <utility>

#include "zrlab/errors.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/sector.hpp"

namespace zrlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Drops trailing entries whose combined mass is at most 1e-18 of the vector
// mass. Returns the first dropped index, or SIZE_MAX when nothing is dropped.
// Dropped mass stays dropped, so the final mass deficit certifies every trim.
std::size_t trim_tail(ScaledVec& w) {
  long double total = 0.0L;
  for (double x : w.v) total += x;
  if (total <= 0.0L) return std::numeric_limits<std::size_t>::max();
  long double budget = total * 1e-18L;
  long double suffix = 0.0L;
  std::size_t keep = w.v.size();
  while (keep > 1 && suffix + (long double)w.v[keep - 1] <= budget) {
    suffix += (long double)w.v[keep - 1];
    --keep;
  }
  if (keep == w.v.size()) return std::numeric_limits<std::size_t>::max();
  w.v.resize(keep);
  return keep;
}

}  // namespace

double CountLaw::prob(std::size_t n) const { return law.at(n); }

double CountLaw::log_prob(std::size_t n) const { return law.log_at(n); }

double CountLaw::mean() const {
  long double m = 0.0L, tot = 0.0L;
  for (std::size_t n = 0; n < law.v.size(); ++n) {
    m += (long double)n * (long double)law.v[n];
    tot += (long double)law.v[n];
  }
  if (tot <= 0.0L) return 0.0;
  return (double)(m / tot);
}

double CountLaw::variance() const {
  double mu = mean();
  long double s = 0.0L, tot = 0.0L;
  for (std::size_t n = 0; n < law.v.size(); ++n) {
    long double d = (long double)n - (long double)mu;
    s += d * d * (long double)law.v[n];
    tot += (long double)law.v[n];
  }
  if (tot <= 0.0L) return 0.0;
  return (double)(s / tot);
}

CountLaw total_count_law(const SiteLaw& site, int volume) {
  if (volume < 1) throw DomainError("count law needs at least one site");
  CountLaw out;
  out.volume = volume;
  out.site_mean = site.mean;
  out.site_variance = site.variance;

  ScaledVec base;
  base.v = site.pmf;
  base.log_scale = 0.0;
  ScaledVec acc;
  acc.v = {1.0};
  acc.log_scale = 0.0;
  std::size_t exact = std::numeric_limits<std::size_t>::max();
  auto shrink = [&exact](ScaledVec& w) {
    std::size_t p = trim_tail(w);
    if (p < exact) exact = p;
    if (w.v.size() > 4'000'000)
      throw CapError("count-law table too long", w.v.size());
  };

  auto power = static_cast<unsigned>(volume);
  std::size_t no_cut = std::numeric_limits<std::size_t>::max() - 1;
  while (power > 0) {
    if (power & 1u) {
      acc = convolve(acc, base, no_cut);
      shrink(acc);
    }
    power >>= 1u;
    if (power > 0) {
      base = convolve(base, base, no_cut);
      shrink(base);
    }
  }

  out.law = std::move(acc);
  long double total = 0.0L;
  for (double x : out.law.v) total += x;
  double mass = (double)total * std::exp(out.law.log_scale);
  out.tail_bound = std::max(0.0, 1.0 - mass);
  out.exact_below = std::min<std::size_t>(exact, out.law.v.size());
  return out;
}

LltErrors llt_errors(const CountLaw& law, int particles) {
  if (particles < 0) throw DomainError("negative particle count");
  double rho_v = law.volume * law.site_mean;
  double s2_v = law.volume * law.site_variance;
  if (!(s2_v > 0.0))
    throw DomainError("degenerate count law: zero variance, no local limit");
  if (static_cast<std::size_t>(particles) >= law.size())
    throw TableError("count-law table ends before the requested total; extend the cut");

  LltErrors out;
  double lam = static_cast<double>(particles);
  for (int n = 1; n <= particles; ++n) {
    double lp = n * std::log(lam) - lam - std::lgamma(n + 1.0);
    double err = std::abs(law.prob(static_cast<std::size_t>(n)) - std::exp(lp));
    out.poisson_err = std::max(out.poisson_err, err);
  }
  double s = std::sqrt(s2_v);
  for (std::size_t n = 0; n < law.size(); ++n) {
    double z = (static_cast<double>(n) - rho_v) / s;
    double phi = std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
    double err = std::abs(s * law.prob(n) - phi);
    out.gaussian_err = std::max(out.gaussian_err, err);
  }
  return out;
}

double ensemble_ratio_sup(const RateFunction& rate, int volume,
                          double sub_fraction, int particles) {
  if (!(sub_fraction > 0.0 && sub_fraction < 1.0))
    throw DomainError("sub-volume fraction must lie strictly between 0 and 1");
  if (volume < 2) throw DomainError("comparison needs at least two sites");
  int sub = static_cast<int>(std::floor(sub_fraction * volume));
  if (sub < 1) throw DomainError("sub-volume is empty at this fraction");
  if (volume - sub < 1) throw DomainError("sub-volume complement is empty");
  if (particles < 1) throw DomainError("comparison requires at least one particle");

  double rho = static_cast<double>(particles) / volume;
  double alpha = invert_fugacity(rate, rho);
  SiteLaw site = grand_canonical_site_law(rate, alpha);
  CountLaw full = total_count_law(site, volume);
  CountLaw rest = total_count_law(site, volume - sub);

  if (static_cast<std::size_t>(particles) >= full.size())
    throw TableError("count-law table ends before the requested total; extend the cut");
  double log_den = full.log_prob(static_cast<std::size_t>(particles));
  if (log_den == kNegInf)
    throw DomainError("count law vanishes at the conditioning total");

  double sup = 0.0;
  for (int n = 0; n <= particles; ++n) {
    double lr = rest.log_prob(static_cast<std::size_t>(particles - n));
    if (lr == kNegInf) continue;
    sup = std::max(sup, std::exp(lr - log_den));
  }
  return sup;
}

double equivalence_gap(const RateFunction& rate, int volume, int particles,
                       int site_index) {
  if (volume < 1) throw DomainError("empty box");
  if (site_index < 0 || site_index >= volume)
    throw DomainError("marked site outside the box");
  if (particles < 0) throw DomainError("negative particle count");
  if (particles == 0) return 0.0;

  double rho = static_cast<double>(particles) / volume;
  double alpha = invert_fugacity(rate, rho);
  SiteLaw site = grand_canonical_site_law(rate, alpha);

  // nu[eta_x = k] is proportional to p_1(k) * p_{V-1}(N - k); identical at
  // every site, so the marked site only matters for validation.
  std::vector<double> lw(static_cast<std::size_t>(particles) + 1, kNegInf);
  if (volume == 1) {
    lw[static_cast<std::size_t>(particles)] = 0.0;
  } else {
    CountLaw rest = total_count_law(site, volume - 1);
    for (int k = 0; k <= particles; ++k) {
      double lp1 = kNegInf;
      if (k < static_cast<int>(site.pmf.size()) && site.pmf[k] > 0.0)
        lp1 = std::log(site.pmf[static_cast<std::size_t>(k)]);
      double lr = rest.log_prob(static_cast<std::size_t>(particles - k));
      if (lp1 != kNegInf && lr != kNegInf)
        lw[static_cast<std::size_t>(k)] = lp1 + lr;
    }
  }
  double lse = log_sum_exp(lw);
  if (lse == kNegInf)
    throw DomainError("canonical marginal vanished; extend the tables");
  long double acc = 0.0L;
  for (int k = 0; k <= particles; ++k) {
    double l = lw[static_cast<std::size_t>(k)];
    if (l == kNegInf) continue;
    acc += std::exp((long double)(l - lse)) * (long double)rate.at(k);
  }
  return std::abs((double)acc - alpha);
}

std::vector<RegimeRow> regime_scan(const RateFunction& rate,
                                   const std::vector<int>& volumes,
                                   double sub_fraction, double rho0, int n0) {
  if (!(rho0 > 0.0)) throw DomainError("regime density threshold must be positive");
  if (n0 < 1) throw DomainError("regime particle threshold must be positive");
  std::vector<RegimeRow> rows;
  for (int v : volumes) {
    std::vector<int> seen;
    auto add = [&](const char* regime, int n) {
      if (n < 1) return;
      if (std::find(seen.begin(), seen.end(), n) != seen.end()) return;
      seen.push_back(n);
      rows.push_back({regime, v, n, ensemble_ratio_sup(rate, v, sub_fraction, n)});
    };
    for (int n = 1; n <= 5; ++n) add("very_small", n);
    int m = static_cast<int>(std::floor(rho0 * v));
    if (m >= n0) {
      add("small", n0);
      add("small", (n0 + m) / 2);
      add("small", m);
    }
    add("large", std::max(m + 1, 6));
    add("large", 2 * v);
    add("large", 4 * v);
  }
  return rows;
}

namespace {

struct FullSiteTable {
  double alpha = 0.0;
  double log_z = 0.0;
  std::vector<double> lp;  // log pmf over the whole rate table
};

FullSiteTable full_site_table(const RateFunction& rate, double alpha) {
  FullSiteTable t;
  t.alpha = alpha;
  std::vector<double> lw(rate.values.size());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    double lk = alpha > 0.0 ? static_cast<double>(k) * std::log(alpha)
                            : (k == 0 ? 0.0 : kNegInf);
    lw[k] = lk - rate.log_factorial(static_cast<int>(k));
  }
  t.log_z = log_sum_exp(lw);
  t.lp = std::move(lw);
  for (double& x : t.lp) x -= t.log_z;
  return t;
}

// log of sum_{j>=1} e^{lp_last + offset} (q e^{growth})^j; valid when the
// per-step ratio q e^{growth} stays below 0.995.
double log_geometric_tail(double lp_last, double q, double offset,
                          double growth) {
  double r = q * std::exp(growth);
  if (!(r < 0.995))
    throw TableError("rate table too short to certify the moment-bound tail");
  return lp_last + offset + std::log(r) - std::log1p(-r);
}

// Smallest a with log(a) + a * u >= target, bisected in log space.
double solve_affine_log(double u, double target) {
  double lo = 1e-9, hi = 1e9;
  if (std::log(lo) + lo * u >= target) return lo;
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);
    if (std::log(mid) + mid * u >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

MgfSuiteResult mgf_suite(const RateFunction& rate,
                         const std::vector<double>& rho_grid,
                         const std::vector<double>& t_grid,
                         std::uint64_t seed) {
  MgfSuiteResult out;
  double a1 = rate.lipschitz_a1;
  double a0 = rate.envelope_a0;
  int table_last = static_cast<int>(rate.values.size()) - 1;

  std::vector<std::array<double, 3>> growth_points;  // rho, t, log value
  for (double rho : rho_grid) {
    if (!(rho > 0.0)) throw DomainError("density grid must be positive");
    double alpha = invert_fugacity(rate, rho);
    FullSiteTable tab = full_site_table(rate, alpha);
    double q = alpha * a0 / (table_last + 1);

    for (double t : t_grid) {
      // Centered rate observable against exp(alpha a1 t^2 e^{a1 |t|}).
      std::vector<double> terms(tab.lp.size());
      for (std::size_t k = 0; k < terms.size(); ++k)
        terms[k] = tab.lp[k] + t * (rate.at(static_cast<int>(k)) - alpha);
      double log_m = log_sum_exp(terms);
      double log_tail =
          t > 0.0 ? log_geometric_tail(tab.lp.back(), q,
                                       t * (a0 * table_last - alpha), t * a0)
                  : log_geometric_tail(tab.lp.back(), q, -t * alpha, 0.0);
      if (log_tail > std::log(1e-10) + log_m)
        throw TableError("extend the rate table: moment tail certificate too large");
      double log_total = log_add(log_m, log_tail);
      double log_bound = alpha * a1 * t * t * std::exp(a1 * std::abs(t));
      ++out.checks_run;
      if (log_total > log_bound + 1e-12)
        out.violations.push_back(
            {"centered_rate_mgf_log", rho, t, log_total, log_bound});

      // Occupation growth: record log mu[e^{t eta}] for the fitted constant.
      if (t > 0.0) {
        for (std::size_t k = 0; k < terms.size(); ++k)
          terms[k] = tab.lp[k] + t * static_cast<double>(k);
        double log_occ = log_sum_exp(terms);
        double occ_tail = log_geometric_tail(
            tab.lp.back(), q, t * static_cast<double>(table_last), t);
        if (occ_tail > std::log(1e-10) + log_occ)
          throw TableError("extend the rate table: moment tail certificate too large");
        growth_points.push_back({rho, t, log_add(log_occ, occ_tail)});
      }
    }
  }

  if (!growth_points.empty()) {
    auto fits = [&](double c) {
      for (const auto& p : growth_points)
        if (c * p[1] * p[0] * std::exp(c * p[1]) < p[2]) return false;
      return true;
    };
    double lo = 1e-9, hi = 1e9;
    if (fits(lo)) {
      out.fitted_growth_constant = lo;
    } else if (!fits(hi)) {
      out.fitted_growth_constant = std::numeric_limits<double>::infinity();
    } else {
      for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        if (fits(mid))
          hi = mid;
        else
          lo = mid;
      }
      out.fitted_growth_constant = hi;
    }
  }

  // Taylor bound E[e^X] <= exp(E[X] + E[X^2 e^{|X|}] / 2) on random
  // finitely supported variables.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uval(-3.0, 3.0);
  std::uniform_int_distribution<int> usize(2, 8);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    int m = usize(rng);
    std::vector<double> x(static_cast<std::size_t>(m));
    std::vector<double> p(static_cast<std::size_t>(m));
    double tot = 0.0;
    for (int i = 0; i < m; ++i) {
      x[static_cast<std::size_t>(i)] = uval(rng);
      p[static_cast<std::size_t>(i)] = std::exp(gauss(rng));
      tot += p[static_cast<std::size_t>(i)];
    }
    double ex = 0.0, e2 = 0.0, mgf = 0.0;
    for (int i = 0; i < m; ++i) {
      double w = p[static_cast<std::size_t>(i)] / tot;
      double v = x[static_cast<std::size_t>(i)];
      ex += w * v;
      e2 += w * v * v * std::exp(std::abs(v));
      mgf += w * std::exp(v);
    }
    double bound = std::exp(ex + 0.5 * e2);
    ++out.checks_run;
    if (mgf > bound * (1.0 + 1e-12))
      out.violations.push_back(
          {"taylor_exponential_bound", static_cast<double>(trial), 0.0, mgf, bound});
  }

  // Square-root transfer on a Binomial(10, 0.3) variable with g measured
  // from the plain MGF.
  {
    constexpr int n = 10;
    constexpr double pr = 0.3;
    std::vector<double> pmf(n + 1);
    for (int k = 0; k <= n; ++k) {
      double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0);
      pmf[static_cast<std::size_t>(k)] =
          std::exp(lc + k * std::log(pr) + (n - k) * std::log1p(-pr));
    }
    double ex = n * pr;
    auto mgf_at = [&](double t) {
      double s = 0.0;
      for (int k = 0; k <= n; ++k)
        s += pmf[static_cast<std::size_t>(k)] * std::exp(t * k);
      return s;
    };
    for (double t : t_grid) {
      if (!(t > 0.0)) continue;
      double g_t = std::log(mgf_at(t)) / (t * ex);
      double g_2t = std::log(mgf_at(2.0 * t)) / (2.0 * t * ex);
      double kk = 2.0 * g_2t + g_t;
      double lhs = 0.0;
      for (int k = 0; k <= n; ++k)
        lhs += pmf[static_cast<std::size_t>(k)] *
               std::exp(t * std::sqrt(static_cast<double>(k)));
      double rhs = std::exp(t * std::sqrt(kk * ex)) + std::exp(t);
      ++out.checks_run;
      if (lhs > rhs * (1.0 + 1e-12))
        out.violations.push_back({"sqrt_transfer_bound", 0.0, t, lhs, rhs});
    }
  }

  // Implied constants for the single-site centered observables on small
  // canonical sectors; reported, never asserted.
  for (auto [l_sites, n_particles] :
       {std::pair{2, 8}, std::pair{4, 8}, std::pair{4, 16}, std::pair{6, 12}}) {
    if (static_cast<int>(rate.values.size()) < n_particles + 2) continue;
    Sector sector(Box::segment(l_sites), n_particles);
    DiscreteMeasure nu = canonical_measure(sector, rate);
    std::vector<double> c0(sector.size()), h0(sector.size());
    std::vector<int> eta(static_cast<std::size_t>(l_sites));
    for (std::uint64_t s = 0; s < sector.size(); ++s) {
      sector.unrank(s, eta);
      c0[s] = rate.at(eta[0]);
      h0[s] = rate.h(eta[0]);
    }
    double mc = nu.mean(c0), mh = nu.mean(h0);
    double n_d = static_cast<double>(n_particles);
    ImpliedConstants ic;
    ic.sites = l_sites;
    ic.particles = n_particles;
    std::vector<double> terms(sector.size());
    for (double t : t_grid) {
      if (t == 0.0) continue;
      for (std::uint64_t s = 0; s < sector.size(); ++s)
        terms[s] = nu.log_prob(s) + t * (c0[s] - mc);
      ic.a_c = std::max(ic.a_c, log_sum_exp(terms) / (n_d * t * t));
      for (std::uint64_t s = 0; s < sector.size(); ++s)
        terms[s] = nu.log_prob(s) + t * n_d * (h0[s] - mh);
      double u = n_d * t * t + std::sqrt(n_d) * std::abs(t);
      ic.a_h = std::max(ic.a_h, solve_affine_log(u, log_sum_exp(terms)));
    }
    out.implied.push_back(ic);
  }

  return out;
}

IdentityReport identity_suite(const RateFunction& rate,
                              const std::vector<double>& alpha_grid) {
  IdentityReport report;
  for (double alpha : alpha_grid) {
    if (alpha < 0.0) throw DomainError("negative fugacity");
    SiteLaw site = grand_canonical_site_law(rate, alpha);
    IdentityRow row;
    row.alpha = alpha;

    // mu[c f] = alpha mu[f(.+1)] over the indicator basis f = 1(eta = j):
    // termwise c(j) p(j) = alpha p(j-1).
    int kc = site.k_cut();
    for (int j = 1; j <= kc; ++j) {
      double lhs = rate.at(j) * site.pmf[static_cast<std::size_t>(j)];
      double rhs = alpha * site.pmf[static_cast<std::size_t>(j - 1)];
      double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      row.shift_residual = std::max(row.shift_residual, std::abs(lhs - rhs) / scale);
    }

    if (alpha == 0.0) {
      row.inverse_rate_skipped = true;
    } else {
      // mu[1/c(eta+1)] = (Z - 1) / (alpha Z); the truncated sum is within
      // tail * A0 of the full one.
      int top = std::min(kc, static_cast<int>(rate.values.size()) - 2);
      long double lhs = 0.0L;
      for (int k = 0; k <= top; ++k)
        lhs += (long double)site.pmf[static_cast<std::size_t>(k)] /
               (long double)rate.at(k + 1);
      double rhs = -std::expm1(-site.log_z) / alpha;
      double scale = std::max({std::abs((double)lhs), std::abs(rhs), 1e-300});
      row.inverse_rate_residual = std::abs((double)lhs - rhs) / scale;
    }

    // Variance diagnostic for the inverse-rate observable.
    {
      int top = std::min(kc, static_cast<int>(rate.values.size()) - 2);
      long double m = 0.0L, m2 = 0.0L, tot = 0.0L;
      for (int k = 0; k <= top; ++k) {
        long double w = site.pmf[static_cast<std::size_t>(k)];
        long double h = rate.h(k);
        m += w * h;
        m2 += w * h * h;
        tot += w;
      }
      if (tot > 0.0L) {
        m /= tot;
        m2 /= tot;
        row.h_variance_times_rho =
            std::max(0.0, (double)(m2 - m * m)) * site.mean;
      }
    }

    report.max_shift_residual =
        std::max(report.max_shift_residual, row.shift_residual);
    report.max_inverse_rate_residual =
        std::max(report.max_inverse_rate_residual, row.inverse_rate_residual);
    report.rows.push_back(row);
  }
  return report;
}

EntropySlacks entropy_inequality_check(const DiscreteMeasure& mu,
                                       const std::vector<double>& f,
                                       const std::vector<double>& g, double t) {
  if (!(t > 0.0)) throw DomainError("entropy inequality needs t > 0");
  std::size_t n = mu.size();
  if (f.size() != n || g.size() != n)
    throw DomainError("function length does not match the measure");

  double mean_f = mu.mean(f);
  double mean_g = mu.mean(g);
  long double cov_acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    cov_acc += (long double)mu.prob(i) * (long double)f[i] *
               ((long double)g[i] - (long double)mean_g);
  double cov = (double)cov_acc;

  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i)
    terms[i] = mu.log_prob(i) + t * (g[i] - mean_g);
  double log_m_plus = log_sum_exp(terms);
  for (std::size_t i = 0; i < n; ++i)
    terms[i] = mu.log_prob(i) - t * (g[i] - mean_g);
  double log_m_minus = log_sum_exp(terms);

  double ent = entropy(mu, f);
  EntropySlacks slacks;
  slacks.plain = mean_f / t * log_m_plus + ent / t - cov;
  slacks.symmetric = mean_f / t * std::max(log_m_plus, log_m_minus) + ent / t -
                     std::abs(cov);
  return slacks;
}

double rothaus_slack(const DiscreteMeasure& mu, const std::vector<double>& f) {
  std::size_t n = mu.size();
  if (f.size() != n) throw DomainError("function length does not match the measure");
  std::vector<double> root(n), centered(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (f[i] < 0.0) throw DomainError("negative entry in a nonnegative function");
    root[i] = std::sqrt(f[i]);
  }
  double mean_root = mu.mean(root);
  for (std::size_t i = 0; i < n; ++i) {
    double d = root[i] - mean_root;
    centered[i] = d * d;
  }
  double var_root = mu.mean(centered);
  return entropy(mu, centered) + 2.0 * var_root - entropy(mu, f);
}

}  // namespace zrlab
