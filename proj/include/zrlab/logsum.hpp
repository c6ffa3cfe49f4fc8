#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace zrlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)), stable for any mix of finite and -inf arguments.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// log sum exp with a long double accumulator; empty input gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs)
    if (x > hi) hi = x;
  if (hi == kNegInf) return kNegInf;
  long double acc = 0.0L;
  for (double x : xs) acc += std::exp((long double)(x - hi));
  return hi + (double)std::log(acc);
}

// Non-negative vector with an explicit log-scale offset: entry i represents
// v[i] * exp(log_scale). Keeps convolutions in fast linear arithmetic while
// staying immune to underflow.
struct ScaledVec {
  std::vector<double> v;
  double log_scale = 0.0;

  double log_at(std::size_t i) const {
    if (i >= v.size() || v[i] <= 0.0) return kNegInf;
    return std::log(v[i]) + log_scale;
  }
  double at(std::size_t i) const {
    if (i >= v.size()) return 0.0;
    return v[i] * std::exp(log_scale);
  }

  // Rescales so that max(v) == 1.
  void normalize_scale() {
    double hi = 0.0;
    for (double x : v)
      if (x > hi) hi = x;
    if (hi <= 0.0) return;
    for (double& x : v) x /= hi;
    log_scale += std::log(hi);
  }
};

inline ScaledVec scaled_from_log(std::span<const double> log_weights) {
  double hi = kNegInf;
  for (double x : log_weights)
    if (x > hi) hi = x;
  ScaledVec out;
  out.v.resize(log_weights.size());
  if (hi == kNegInf) {
    out.log_scale = 0.0;
    return out;
  }
  out.log_scale = hi;
  for (std::size_t i = 0; i < log_weights.size(); ++i)
    out.v[i] = std::exp(log_weights[i] - hi);
  return out;
}

// Truncated convolution: out[n] = sum_k a[k] * b[n-k] for n <= n_cut. Exact
// for the retained range (supports add, no mass from beyond the cut leaks in).
inline ScaledVec convolve(const ScaledVec& a, const ScaledVec& b, std::size_t n_cut) {
  std::size_t out_len = a.v.size() + b.v.size();
  out_len = out_len > 0 ? out_len - 1 : 0;
  if (out_len > n_cut + 1) out_len = n_cut + 1;
  ScaledVec out;
  out.log_scale = a.log_scale + b.log_scale;
  out.v.assign(out_len, 0.0);
  for (std::size_t n = 0; n < out_len; ++n) {
    std::size_t k_lo = n >= b.v.size() ? n - (b.v.size() - 1) : 0;
    std::size_t k_hi = n < a.v.size() ? n : a.v.size() - 1;
    long double acc = 0.0L;
    for (std::size_t k = k_lo; k <= k_hi; ++k)
      acc += (long double)a.v[k] * (long double)b.v[n - k];
    out.v[n] = (double)acc;
  }
  out.normalize_scale();
  return out;
}

// `power`-fold self-convolution by binary doubling, truncated at n_cut.
inline ScaledVec convolve_power(ScaledVec base, unsigned power, std::size_t n_cut) {
  ScaledVec acc;
  acc.v = {1.0};
  acc.log_scale = 0.0;
  while (power > 0) {
    if (power & 1u) acc = convolve(acc, base, n_cut);
    power >>= 1u;
    if (power > 0) base = convolve(base, base, n_cut);
  }
  return acc;
}

}  // namespace zrlab
