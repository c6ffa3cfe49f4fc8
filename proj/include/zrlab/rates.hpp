#pragma once

#include <optional>
#include <string>
#include <vector>

namespace zrlab {

// Tabulated jump-rate function c(0..n_max) with the certified constants used
// throughout: a1 = max |c(k+1)-c(k)|, the uniform-increase pair (k0, a2) when
// it exists on the table, and the tightest envelope A0 with
// k/A0 <= c(k) <= A0*k for 1 <= k <= n_max.
struct RateFunction {
  std::vector<double> values;        // c(0) == 0, c(n) > 0 for n >= 1
  std::vector<double> log_factorials;  // log c(n)! with c(0)! = 1
  double lipschitz_a1 = 0.0;
  std::optional<double> monotone_a2;  // absent when no k0 certifies an increase
  std::optional<int> monotone_k0;
  double envelope_a0 = 1.0;
  std::string label;  // spec string, e.g. "linear:1"

  int n_max() const { return static_cast<int>(values.size()) - 1; }
  double at(int n) const;
  // c extended to real arguments by linear interpolation between integers.
  double at_real(double r) const;
  double log_factorial(int n) const;
  // h(n) = (n+1)/c(n+1); needs n+1 within the table.
  double h(int n) const;
};

// Validates the table and computes the certified constants.
// Throws DomainError("empty input...") / DomainError("invalid rate...").
RateFunction validate_rate_function(std::vector<double> values, std::string label = "table");

// Built-in families.
RateFunction linear_rate(double lambda, int n_max);
RateFunction constant_rate(int n_max);
RateFunction staircase_rate(int step, int n_max);

// Parses a family spec: "linear", "linear:<lambda>", "constant",
// "staircase:<step>", or "table:<path>". n_max applies to the families.
RateFunction rate_from_spec(const std::string& spec, int n_max);

// Text format: one "n value" pair per line, '#' starts a comment.
RateFunction load_rate_table(const std::string& path);
void save_rate_table(const RateFunction& rate, const std::string& path);

}  // namespace zrlab
