#pragma once

#include <span>
#include <vector>

#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"

namespace zrlab {

// Normalized probability vector kept in log space.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  static DiscreteMeasure from_log_weights(std::vector<double> log_weights);
  static DiscreteMeasure from_weights(std::span<const double> weights);

  std::size_t size() const { return log_weights_.size(); }
  double log_normalizer() const { return log_normalizer_; }
  double log_prob(std::size_t i) const { return log_weights_[i] - log_normalizer_; }
  double prob(std::size_t i) const;
  std::vector<double> probs() const;
  std::span<const double> log_weights() const { return log_weights_; }

  // mu[f]
  double mean(std::span<const double> f) const;
  // mu[f, g] = mu[fg] - mu[f]mu[g]
  double covariance(std::span<const double> f, std::span<const double> g) const;
  double variance(std::span<const double> f) const { return covariance(f, f); }

 private:
  std::vector<double> log_weights_;
  double log_normalizer_ = 0.0;
};

// Equilibrium of the fixed-N dynamics: weights prod_x 1/c(eta_x)!.
// Requires the rate table to reach N.
DiscreteMeasure canonical_measure(const Sector& sector, const RateFunction& rate);

// Ent_mu(f) = mu[f log f] - mu[f] log mu[f], with 0 log 0 = 0. f must be >= 0.
double entropy(const DiscreteMeasure& mu, std::span<const double> f);

}  // namespace zrlab
