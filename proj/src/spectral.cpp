#include "zrlab/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "zrlab/errors.hpp"
#include "zrlab/parallel.hpp"

namespace zrlab {

namespace {

// Symmetrized operator A = D^{1/2} (-L) D^{-1/2} built from an edge form:
// A = D^{-1/2} Q D^{-1/2} with Q = sum_e w_e (e_i - e_j)(e_i - e_j)^T.
struct SymOp {
  const EdgeForm* form;
  std::vector<double> inv_sqrt_nu;
  std::vector<double> diag;  // A_ii = (sum_e at i w_e) / nu_i

  explicit SymOp(const EdgeForm& f, const DiscreteMeasure& nu) : form(&f) {
    std::size_t n = f.n;
    inv_sqrt_nu.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double p = nu.prob(i);
      if (p <= 0.0) throw DomainError("spectral solve needs a strictly positive measure");
      inv_sqrt_nu[i] = 1.0 / std::sqrt(p);
    }
    diag.assign(n, 0.0);
    for (std::size_t e = 0; e < f.w.size(); ++e) {
      diag[f.i[e]] += f.w[e] * inv_sqrt_nu[f.i[e]] * inv_sqrt_nu[f.i[e]];
      diag[f.j[e]] += f.w[e] * inv_sqrt_nu[f.j[e]] * inv_sqrt_nu[f.j[e]];
    }
  }

  std::size_t n() const { return inv_sqrt_nu.size(); }

  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n(); ++i) y[i] = diag[i] * x[i];
    const auto& f = *form;
    for (std::size_t e = 0; e < f.w.size(); ++e) {
      std::uint32_t a = f.i[e], b = f.j[e];
      double cross = f.w[e] * inv_sqrt_nu[a] * inv_sqrt_nu[b];
      y[a] -= cross * x[b];
      y[b] -= cross * x[a];
    }
  }

  double gershgorin_max() const {
    // A_ii + sum_j |A_ij| = 2 * diag_i for this structure.
    double hi = 0.0;
    for (double d : diag) hi = std::max(hi, 2.0 * d);
    return hi;
  }
};

double dot(std::span<const double> a, std::span<const double> b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (long double)a[i] * b[i];
  return (double)acc;
}

void axpy(double c, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

double norm(std::span<const double> a) { return std::sqrt(std::max(0.0, dot(a, a))); }

GapResult dense_gap(const SymOp& op, const DiscreteMeasure& nu) {
  std::size_t n = op.n();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero((Eigen::Index)n, (Eigen::Index)n);
  for (std::size_t i = 0; i < n; ++i) A((Eigen::Index)i, (Eigen::Index)i) = op.diag[i];
  const EdgeForm& f = *op.form;
  for (std::size_t e = 0; e < f.w.size(); ++e) {
    std::uint32_t a = f.i[e], b = f.j[e];
    double cross = f.w[e] * op.inv_sqrt_nu[a] * op.inv_sqrt_nu[b];
    A((Eigen::Index)a, (Eigen::Index)b) -= cross;
    A((Eigen::Index)b, (Eigen::Index)a) -= cross;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolve failed");
  GapResult res;
  res.used_dense = true;
  res.gap = es.eigenvalues()(1);
  // Witness back in generator coordinates: f = D^{-1/2} v.
  res.witness.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    res.witness[i] = es.eigenvectors()((Eigen::Index)i, 1) * op.inv_sqrt_nu[i];
  (void)nu;
  return res;
}

// Lanczos with full reorthogonalization on the deflated operator
// P A P, P = I - v0 v0^T where v0 = sqrt(nu) spans the kernel.
GapResult lanczos_gap(const SymOp& op, const DiscreteMeasure& nu, const GapOptions& opts) {
  std::size_t n = op.n();
  std::vector<double> v0(n);
  for (std::size_t i = 0; i < n; ++i) v0[i] = 1.0 / op.inv_sqrt_nu[i];
  double v0n = norm(v0);
  for (double& x : v0) x /= v0n;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  double lam_max = op.gershgorin_max();
  double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(lam_max, 1.0);

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> w(n), start(n);
  auto orthogonalize = [&](std::vector<double>& x) {
    for (int pass = 0; pass < 2; ++pass) {
      axpy(-dot(x, v0), v0, x);
      for (const auto& q : basis) axpy(-dot(x, q), q, x);
    }
  };

  for (std::size_t i = 0; i < n; ++i) start[i] = gauss(rng);
  GapResult res;
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    basis.clear();
    alpha.clear();
    beta.clear();
    std::vector<double> q = start;
    orthogonalize(q);
    double qn = norm(q);
    if (qn <= floor_tol) {  // degenerate start, draw again
      for (std::size_t i = 0; i < n; ++i) start[i] = gauss(rng);
      continue;
    }
    for (double& x : q) x /= qn;
    basis.push_back(q);

    double theta = 0.0, resid = std::numeric_limits<double>::infinity();
    Eigen::VectorXd ritz_small;
    int m = 0;
    while (m < opts.max_subspace) {
      op.apply(basis.back(), w);
      double a = dot(w, basis.back());
      alpha.push_back(a);
      orthogonalize(w);
      double b = norm(w);
      ++m;

      // Smallest Ritz pair of the current tridiagonal.
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int k = 0; k < m; ++k) T(k, k) = alpha[(std::size_t)k];
      for (int k = 0; k + 1 < m; ++k) {
        T(k, k + 1) = beta[(std::size_t)k];
        T(k + 1, k) = beta[(std::size_t)k];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      theta = es.eigenvalues()(0);
      ritz_small = es.eigenvectors().col(0);
      resid = std::abs(b * ritz_small(m - 1));
      if (resid <= std::max(opts.tol * std::abs(theta), floor_tol)) break;
      if (b <= floor_tol) break;  // invariant subspace found

      beta.push_back(b);
      for (double& x : w) x /= b;
      basis.push_back(w);
    }

    res.iterations += m;
    // Assemble the Ritz vector for the next restart / the final witness.
    std::vector<double> y(n, 0.0);
    for (int k = 0; k < m; ++k) axpy(ritz_small(k), basis[(std::size_t)k], y);
    bool converged = resid <= std::max(opts.tol * std::abs(theta), floor_tol);
    if (converged) {
      res.gap = theta;
      res.witness.resize(n);
      for (std::size_t i = 0; i < n; ++i) res.witness[i] = y[i] * op.inv_sqrt_nu[i];
      (void)nu;
      return res;
    }
    start = y;  // warm restart from the best Ritz vector
  }
  throw ConvergenceError("Lanczos did not converge to the spectral gap");
}

}  // namespace

GapResult spectral_gap(const EdgeForm& form, const DiscreteMeasure& nu, const GapOptions& opts) {
  if (form.n < 2) throw DomainError("spectral gap needs at least two states");
  if (nu.size() != form.n) throw DomainError("measure does not match the form");
  SymOp op(form, nu);
  if (form.n <= opts.dense_cutoff) return dense_gap(op, nu);
  try {
    return lanczos_gap(op, nu, opts);
  } catch (const ConvergenceError&) {
    if (form.n <= 4000) return dense_gap(op, nu);  // last-resort fallback
    throw;
  }
}

GapResult spectral_gap(const SparseGenerator& gen, const DiscreteMeasure& nu,
                       const GapOptions& opts) {
  return spectral_gap(edge_form(gen, nu), nu, opts);
}

namespace {

// Ent(g^2) evaluated so that the entropy/Dirichlet ratio stays meaningful for
// g arbitrarily close to a constant. Writing g = m(1 + s) with m = nu[g] and
// nu[s] = 0,
//   Ent(g^2) = m^2 (2 nu[s^2] + 2/3 nu[s^3] - 1/6 nu[s^4] - 1/2 nu[s^2]^2
//              + O(s^5)),
// every term of which is a moment of the deviation, free of the m log m
// cancellation. Since 2 nu[psi^2] / E(psi,psi) <= 2/gap for any vector, the
// ratio cannot blow up on rounding noise. Away from the constant the
// nonnegative-integrand form of the entropy is accurate directly.
double ent_of_square(const std::vector<double>& nu_probs, const std::vector<double>& g) {
  std::size_t n = g.size();
  long double m_acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i) m_acc += (long double)nu_probs[i] * g[i];
  double m = (double)m_acc;

  double dev_max = 0.0;
  long double d2 = 0.0L, d3 = 0.0L, d4 = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    double d = g[i] - m;
    dev_max = std::max(dev_max, std::abs(d));
    long double w = nu_probs[i];
    long double dd = (long double)d * d;
    d2 += w * dd;
    d3 += w * dd * d;
    d4 += w * dd * d * d;
  }
  if (dev_max == 0.0) return 0.0;

  if (m != 0.0 && dev_max <= 1e-3 * std::abs(m)) {
    double m2 = m * m;
    double e = 2.0 * (double)d2 + (2.0 / 3.0) * (double)d3 / m -
               (1.0 / 6.0) * (double)d4 / m2 - 0.5 * (double)(d2 * d2) / m2;
    return std::max(0.0, e);
  }

  long double mean = 0.0L;
  for (std::size_t i = 0; i < n; ++i) mean += (long double)nu_probs[i] * g[i] * g[i];
  double md = (double)mean;
  if (!(md > 0.0)) return 0.0;
  long double phi_sum = 0.0L, ubar = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    double u = g[i] * g[i] / md - 1.0;
    double phi = u <= -1.0 ? 1.0 : (1.0 + u) * std::log1p(u) - u;
    phi_sum += (long double)nu_probs[i] * phi;
    ubar += (long double)nu_probs[i] * u;
  }
  return std::max(0.0, (double)(mean * (phi_sum + ubar * (1.0 + std::log(md)))));
}

}  // namespace

double lsi_ratio(const EdgeForm& form, const DiscreteMeasure& nu, std::span<const double> g) {
  double den = form.quad(g);
  if (den <= 0.0) return 0.0;
  std::vector<double> gv(g.begin(), g.end());
  return ent_of_square(nu.probs(), gv) / den;
}

namespace {

struct AscentResult {
  double ratio = 0.0;
  std::vector<double> g;
  bool degenerate = false;
};

// One projected-gradient ascent of R(g) = Ent(g^2)/E(g,g) on {nu[g^2] = 1}.
AscentResult ascend(const EdgeForm& form, const std::vector<double>& nu_probs,
                    std::vector<double> g, int max_iters, double grad_tol) {
  std::size_t n = g.size();
  auto normalize = [&](std::vector<double>& x) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < n; ++i) s += (long double)nu_probs[i] * x[i] * x[i];
    double net = std::sqrt((double)s);
    if (net <= 0.0) return false;
    for (double& v : x) v /= net;
    return true;
  };
  auto ent = [&](const std::vector<double>& x) { return ent_of_square(nu_probs, x); };

  AscentResult out;
  if (!normalize(g)) {
    out.degenerate = true;
    return out;
  }
  double E = ent(g);
  double D = form.quad(g);
  if (D <= 0.0) {
    out.degenerate = true;
    return out;
  }
  double R = E / D;
  std::vector<double> grad(n), gE(n), gD(n), trial(n);
  double step = 0.25;
  for (int it = 0; it < max_iters; ++it) {
    // grad E on the sphere, grad D; then the ratio gradient.
    for (std::size_t i = 0; i < n; ++i) {
      double x2 = g[i] * g[i];
      gE[i] = x2 > 0.0 ? 2.0 * nu_probs[i] * g[i] * std::log(x2) : 0.0;
      gD[i] = 0.0;
    }
    for (std::size_t e = 0; e < form.w.size(); ++e) {
      double d = 2.0 * form.w[e] * (g[form.i[e]] - g[form.j[e]]);
      gD[form.i[e]] += d;
      gD[form.j[e]] -= d;
    }
    for (std::size_t i = 0; i < n; ++i) grad[i] = (gE[i] * D - E * gD[i]) / (D * D);
    // Project onto the tangent space of the sphere in the nu metric:
    // constraint gradient is 2 nu_i g_i; remove the component along it.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += grad[i] * g[i];
      den += nu_probs[i] * g[i] * g[i];  // == 1 up to drift
    }
    double lam = num / (2.0 * den);
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] -= 2.0 * lam * nu_probs[i] * g[i];
      gnorm2 += grad[i] * grad[i];
    }
    double gnorm = std::sqrt(gnorm2);
    if (gnorm <= grad_tol) break;

    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = g[i] + step * grad[i] / gnorm;
      if (!normalize(trial)) break;
      double Et = ent(trial);
      double Dt = form.quad(trial);
      if (Dt > 0.0 && Et / Dt > R + 1e-16 * std::abs(R)) {
        g.swap(trial);
        E = Et;
        D = Dt;
        R = E / D;
        step = std::min(step * 1.6, 64.0);
        improved = true;
        break;
      }
      step *= 0.5;
      if (step < 1e-14) break;
    }
    if (!improved) break;
  }
  out.ratio = R;
  out.g = std::move(g);
  return out;
}

}  // namespace

LsiResult lsi_constant(const EdgeForm& form, const DiscreteMeasure& nu, const LsiOptions& opts,
                       const std::vector<double>* gap_witness) {
  std::size_t n = form.n;
  if (n < 2) throw DomainError("LSI optimization needs at least two states");
  if (nu.size() != n) throw DomainError("measure does not match the form");
  std::vector<double> nu_probs = nu.probs();

  // Starts: seeded Gaussian restarts, the gap witness, and indicators of the
  // lightest and heaviest states (valid lower-bound trials on their own).
  std::vector<std::vector<double>> starts;
  for (int r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + (std::uint64_t)r + 1);
    std::normal_distribution<double> gauss;
    std::vector<double> g(n);
    for (double& x : g) x = gauss(rng);
    starts.push_back(std::move(g));
  }
  if (gap_witness && gap_witness->size() == n) starts.push_back(*gap_witness);
  std::size_t i_min = 0, i_max = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (nu_probs[i] < nu_probs[i_min]) i_min = i;
    if (nu_probs[i] > nu_probs[i_max]) i_max = i;
  }
  for (std::size_t idx : {i_min, i_max}) {
    std::vector<double> g(n, 0.0);
    g[idx] = 1.0;
    starts.push_back(std::move(g));
  }

  std::vector<AscentResult> results(starts.size());
  parallel_for(starts.size(), opts.threads, [&](std::size_t k) {
    results[k] = ascend(form, nu_probs, starts[k], opts.max_iters, opts.grad_tol);
  });

  LsiResult out;
  bool all_degenerate = true;
  for (std::size_t k = 0; k < results.size(); ++k) {  // reduce in start order
    const auto& r = results[k];
    if (r.degenerate) continue;
    all_degenerate = false;
    if (r.ratio > out.estimate) {
      out.estimate = r.ratio;
      out.witness = r.g;
      out.best_restart = static_cast<int>(k);
    }
  }
  out.degenerate = all_degenerate;
  if (all_degenerate) {
    // Deterministic fallback: an indicator trial still certifies a bound when
    // the chain has any edge of positive weight.
    std::vector<double> g(n, 0.0);
    g[i_min] = 1.0;
    double r = lsi_ratio(form, nu, g);
    out.estimate = r;
    out.witness = std::move(g);
  }

  // The constant direction is a supremum direction the ascent can never
  // attain: along g = 1 + eps*phi the ratio tends to 2 Var(phi)/E(phi,phi),
  // which equals 2/gap at the gap eigenfunction. Probe that branch explicitly
  // so the estimate always covers the kernel-adjacent limit.
  {
    std::vector<double> phi;
    if (gap_witness && gap_witness->size() == n) {
      phi = *gap_witness;
    } else {
      GapOptions gopts;
      phi = spectral_gap(form, nu, gopts).witness;
    }
    long double mean = 0.0L;
    for (std::size_t i = 0; i < n; ++i) mean += (long double)nu_probs[i] * phi[i];
    long double norm2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] -= (double)mean;
      norm2 += (long double)nu_probs[i] * phi[i] * phi[i];
    }
    double norm = std::sqrt((double)norm2);
    if (norm > 0.0) {
      // eps small enough that the probe stays in the centered-expansion regime
      // of the entropy (pointwise deviation < 1e-3), large enough that the
      // deviation moments are not dominated by rounding.
      double amax = 0.0;
      for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, std::abs(phi[i]) / norm);
      double eps = std::clamp(5e-4 / std::max(amax, 1.0), 1e-8, 1e-7);
      std::vector<double> probe(n);
      for (std::size_t i = 0; i < n; ++i) probe[i] = 1.0 + eps * phi[i] / norm;
      double r = lsi_ratio(form, nu, probe);
      if (r > out.estimate) {
        out.estimate = r;
        out.witness = std::move(probe);
        out.degenerate = false;
      }
    }
  }
  out.certified_lower = out.estimate;  // every evaluated ratio is a lower bound
  return out;
}

LsiResult lsi_constant(const SparseGenerator& gen, const DiscreteMeasure& nu,
                       const LsiOptions& opts) {
  return lsi_constant(edge_form(gen, nu), nu, opts, nullptr);
}

}  // namespace zrlab
