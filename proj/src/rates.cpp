#include "zrlab/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "zrlab/errors.hpp"

namespace zrlab {

double RateFunction::at(int n) const {
  if (n < 0 || n > n_max())
    throw TableError("rate table too short: need c(" + std::to_string(n) +
                     "), table ends at n_max=" + std::to_string(n_max()));
  return values[static_cast<std::size_t>(n)];
}

double RateFunction::at_real(double r) const {
  if (r < 0.0) throw DomainError("rate argument must be >= 0");
  double fl = std::floor(r);
  int lo = static_cast<int>(fl);
  if (lo >= n_max()) return at(n_max());
  double t = r - fl;
  return (1.0 - t) * at(lo) + t * at(lo + 1);
}

double RateFunction::log_factorial(int n) const {
  if (n < 0 || n > n_max())
    throw TableError("rate table too short: need c(" + std::to_string(n) +
                     ")! , table ends at n_max=" + std::to_string(n_max()));
  return log_factorials[static_cast<std::size_t>(n)];
}

double RateFunction::h(int n) const { return (n + 1) / at(n + 1); }

RateFunction validate_rate_function(std::vector<double> values, std::string label) {
  if (values.empty()) throw DomainError("empty input: rate table has no entries");
  if (values[0] != 0.0)
    throw DomainError("invalid rate: c(0) must be 0, got " + std::to_string(values[0]));
  int n_max = static_cast<int>(values.size()) - 1;
  for (int n = 1; n <= n_max; ++n) {
    double c = values[static_cast<std::size_t>(n)];
    if (!(c > 0.0) || !std::isfinite(c))
      throw DomainError("invalid rate: c(" + std::to_string(n) + ") = " +
                        std::to_string(c) + " must be finite and > 0");
  }

  RateFunction rate;
  rate.values = std::move(values);
  rate.label = std::move(label);

  rate.log_factorials.resize(rate.values.size());
  rate.log_factorials[0] = 0.0;
  long double acc = 0.0L;
  for (int n = 1; n <= n_max; ++n) {
    acc += std::log((long double)rate.values[static_cast<std::size_t>(n)]);
    rate.log_factorials[static_cast<std::size_t>(n)] = (double)acc;
  }

  double a1 = 0.0;
  for (int n = 0; n < n_max; ++n)
    a1 = std::max(a1, std::abs(rate.values[n + 1] - rate.values[n]));
  rate.lipschitz_a1 = a1;

  // Smallest k0 whose uniform-increase constant is positive; a2 is the largest
  // constant valid for that k0 on the table. min over k-j >= k0 of c(k)-c(j)
  // equals min over k of c(k) - prefix_max(k - k0).
  std::vector<double> prefix_max(rate.values.size());
  prefix_max[0] = rate.values[0];
  for (int n = 1; n <= n_max; ++n)
    prefix_max[n] = std::max(prefix_max[n - 1], rate.values[static_cast<std::size_t>(n)]);
  for (int k0 = 1; k0 <= n_max; ++k0) {
    double a2 = std::numeric_limits<double>::infinity();
    for (int k = k0; k <= n_max; ++k)
      a2 = std::min(a2, rate.values[static_cast<std::size_t>(k)] - prefix_max[k - k0]);
    if (a2 > 0.0 && std::isfinite(a2)) {
      rate.monotone_k0 = k0;
      rate.monotone_a2 = a2;
      break;
    }
  }

  double a0 = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    double c = rate.values[static_cast<std::size_t>(n)];
    a0 = std::max(a0, std::max(c / n, n / c));
  }
  rate.envelope_a0 = a0;
  return rate;
}

RateFunction linear_rate(double lambda, int n_max) {
  if (!(lambda > 0.0)) throw DomainError("invalid rate: linear slope must be > 0");
  if (n_max < 1) throw DomainError("invalid rate: n_max must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) v[static_cast<std::size_t>(n)] = lambda * n;
  std::ostringstream lab;
  lab << "linear:" << lambda;
  return validate_rate_function(std::move(v), lab.str());
}

RateFunction constant_rate(int n_max) {
  if (n_max < 1) throw DomainError("invalid rate: n_max must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n_max) + 1, 1.0);
  v[0] = 0.0;
  return validate_rate_function(std::move(v), "constant");
}

RateFunction staircase_rate(int step, int n_max) {
  if (step < 1) throw DomainError("invalid rate: staircase step must be >= 1");
  if (n_max < 1) throw DomainError("invalid rate: n_max must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 1; n <= n_max; ++n)
    v[static_cast<std::size_t>(n)] = static_cast<double>(step * ((n + step - 1) / step));
  return validate_rate_function(std::move(v), "staircase:" + std::to_string(step));
}

RateFunction rate_from_spec(const std::string& spec, int n_max) {
  std::string head = spec;
  std::string arg;
  if (auto pos = spec.find(':'); pos != std::string::npos) {
    head = spec.substr(0, pos);
    arg = spec.substr(pos + 1);
  }
  if (head == "linear") return linear_rate(arg.empty() ? 1.0 : std::stod(arg), n_max);
  if (head == "constant") return constant_rate(n_max);
  if (head == "staircase") return staircase_rate(arg.empty() ? 2 : std::stoi(arg), n_max);
  if (head == "table") {
    if (arg.empty()) throw UsageError("rate spec 'table:' needs a file path");
    return load_rate_table(arg);
  }
  throw UsageError("unknown rate spec '" + spec +
                   "' (expected linear[:lambda], constant, staircase[:step], table:path)");
}

RateFunction load_rate_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open rate table file '" + path + "'");
  std::map<int, double> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    int n;
    double value;
    if (!(ls >> n)) continue;  // blank or comment-only line
    if (!(ls >> value))
      throw UsageError("rate table '" + path + "' line " + std::to_string(line_no) +
                       ": expected 'n value'");
    if (n < 0)
      throw UsageError("rate table '" + path + "' line " + std::to_string(line_no) +
                       ": n must be >= 0");
    if (entries.count(n))
      throw UsageError("rate table '" + path + "' line " + std::to_string(line_no) +
                       ": duplicate entry for n=" + std::to_string(n));
    entries[n] = value;
  }
  if (entries.empty()) throw DomainError("empty input: rate table '" + path + "' has no entries");
  int n_max = entries.rbegin()->first;
  std::vector<double> v(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    auto it = entries.find(n);
    if (it == entries.end())
      throw UsageError("rate table '" + path + "' is missing n=" + std::to_string(n));
    v[static_cast<std::size_t>(n)] = it->second;
  }
  return validate_rate_function(std::move(v), "table:" + path);
}

void save_rate_table(const RateFunction& rate, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write rate table file '" + path + "'");
  out << "# jump rates: n c(n)\n";
  for (int n = 0; n <= rate.n_max(); ++n) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d %.17g\n", n, rate.values[static_cast<std::size_t>(n)]);
    out << buf;
  }
}

}  // namespace zrlab
