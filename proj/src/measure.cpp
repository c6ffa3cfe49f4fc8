#include "zrlab/measure.hpp"

#include <cmath>

#include "zrlab/errors.hpp"
#include "zrlab/logsum.hpp"

namespace zrlab {

DiscreteMeasure DiscreteMeasure::from_log_weights(std::vector<double> log_weights) {
  if (log_weights.empty()) throw DomainError("empty input: measure needs at least one point");
  DiscreteMeasure mu;
  mu.log_normalizer_ = log_sum_exp(log_weights);
  if (mu.log_normalizer_ == kNegInf)
    throw DomainError("measure has zero total mass");
  mu.log_weights_ = std::move(log_weights);
  return mu;
}

DiscreteMeasure DiscreteMeasure::from_weights(std::span<const double> weights) {
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw DomainError("measure weights must be >= 0");
    lw[i] = weights[i] > 0.0 ? std::log(weights[i]) : kNegInf;
  }
  return from_log_weights(std::move(lw));
}

double DiscreteMeasure::prob(std::size_t i) const {
  double lp = log_prob(i);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

std::vector<double> DiscreteMeasure::probs() const {
  std::vector<double> p(size());
  for (std::size_t i = 0; i < size(); ++i) p[i] = prob(i);
  return p;
}

double DiscreteMeasure::mean(std::span<const double> f) const {
  if (f.size() != size()) throw DomainError("function length does not match the measure");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < size(); ++i) acc += (long double)prob(i) * f[i];
  return (double)acc;
}

double DiscreteMeasure::covariance(std::span<const double> f, std::span<const double> g) const {
  if (f.size() != size() || g.size() != size())
    throw DomainError("function length does not match the measure");
  long double mf = 0.0L, mg = 0.0L;
  for (std::size_t i = 0; i < size(); ++i) {
    long double p = prob(i);
    mf += p * f[i];
    mg += p * g[i];
  }
  long double acc = 0.0L;
  for (std::size_t i = 0; i < size(); ++i)
    acc += (long double)prob(i) * (f[i] - (double)mf) * (g[i] - (double)mg);
  return (double)acc;
}

DiscreteMeasure canonical_measure(const Sector& sector, const RateFunction& rate) {
  if (rate.n_max() < sector.particles())
    throw TableError("rate table too short for the sector: need c up to n=" +
                     std::to_string(sector.particles()));
  std::vector<double> lw(sector.size());
  std::vector<int> eta(static_cast<std::size_t>(sector.sites()));
  for (std::uint64_t i = 0; i < sector.size(); ++i) {
    sector.unrank(i, eta);
    double s = 0.0;
    for (int x = 0; x < sector.sites(); ++x) s += rate.log_factorial(eta[static_cast<std::size_t>(x)]);
    lw[i] = -s;
  }
  return DiscreteMeasure::from_log_weights(std::move(lw));
}

double entropy(const DiscreteMeasure& mu, std::span<const double> f) {
  if (f.size() != mu.size()) throw DomainError("function length does not match the measure");
  long double mean = 0.0L;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (f[i] < 0.0) throw DomainError("entropy needs f >= 0");
    mean += (long double)mu.prob(i) * f[i];
  }
  if (mean <= 0.0L) return 0.0;

  // Ent(f) = m * (nu[phi(u)] + ubar (1 + log m)) with u = f/m - 1 and
  // phi(u) = (1+u) log1p(u) - u >= 0. Summing the nonnegative integrand keeps
  // full relative accuracy for f close to a constant, where the textbook
  // nu[f log f] - m log m difference cancels catastrophically.
  double m = (double)mean;
  long double phi_sum = 0.0L, ubar = 0.0L;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    long double p = mu.prob(i);
    double u = f[i] / m - 1.0;
    double phi = u <= -1.0 ? 1.0 : (1.0 + u) * std::log1p(u) - u;
    phi_sum += p * phi;
    ubar += p * u;
  }
  long double ent = mean * (phi_sum + ubar * (1.0 + std::log(m)));
  return std::max(0.0, (double)ent);
}

}  // namespace zrlab
