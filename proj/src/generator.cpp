#include "zrlab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zrlab/errors.hpp"
#include "zrlab/logsum.hpp"

namespace zrlab {

void SparseGenerator::apply(std::span<const double> f, std::span<double> out) const {
  if (f.size() != n_states || out.size() != n_states)
    throw DomainError("function length does not match the generator");
  for (std::uint64_t i = 0; i < n_states; ++i) {
    long double acc = (long double)diagonal[i] * f[i];
    for (std::uint64_t t = row_ptr[i]; t < row_ptr[i + 1]; ++t)
      acc += (long double)rate[t] * f[col[t]];
    out[i] = (double)acc;
  }
}

SparseGenerator assemble_generator(const Sector& sector, const RateFunction& rate_fn) {
  const Box& box = sector.box();
  int sites = box.size();
  if (rate_fn.n_max() < sector.particles())
    throw TableError("rate table too short for the sector: need c up to n=" +
                     std::to_string(sector.particles()));

  SparseGenerator gen;
  gen.n_states = sector.size();
  gen.row_ptr.assign(gen.n_states + 1, 0);
  gen.diagonal.assign(gen.n_states, 0.0);

  std::vector<int> eta(static_cast<std::size_t>(sites));
  // Count transitions per state first to build CSR without reallocation.
  for (std::uint64_t s = 0; s < gen.n_states; ++s) {
    sector.unrank(s, eta);
    std::uint64_t moves = 0;
    for (int x = 0; x < sites; ++x)
      if (eta[static_cast<std::size_t>(x)] > 0) moves += static_cast<std::uint64_t>(box.degree(x));
    gen.row_ptr[s + 1] = gen.row_ptr[s] + moves;
  }
  gen.col.resize(gen.row_ptr[gen.n_states]);
  gen.rate.resize(gen.row_ptr[gen.n_states]);

  for (std::uint64_t s = 0; s < gen.n_states; ++s) {
    sector.unrank(s, eta);
    std::uint64_t t = gen.row_ptr[s];
    double out_rate = 0.0;
    for (int x = 0; x < sites; ++x) {
      int n_x = eta[static_cast<std::size_t>(x)];
      if (n_x <= 0) continue;
      double c = rate_fn.at(n_x);
      for (int y : box.neighbors(x)) {
        gen.col[t] = static_cast<std::uint32_t>(sector.rank_after_move(eta, s, x, y));
        gen.rate[t] = c;
        out_rate += c;
        ++t;
      }
    }
    gen.diagonal[s] = -out_rate;
  }
  return gen;
}

double dirichlet_form(const SparseGenerator& gen, const DiscreteMeasure& nu,
                      std::span<const double> f, std::span<const double> g) {
  if (f.size() != gen.n_states || g.size() != gen.n_states || nu.size() != gen.n_states)
    throw DomainError("dirichlet form: size mismatch");
  long double acc = 0.0L;
  for (std::uint64_t i = 0; i < gen.n_states; ++i) {
    double p = nu.prob(i);
    if (p == 0.0) continue;
    for (std::uint64_t t = gen.row_ptr[i]; t < gen.row_ptr[i + 1]; ++t) {
      std::uint32_t j = gen.col[t];
      acc += 0.5L * (long double)p * gen.rate[t] * (f[j] - f[i]) * (g[j] - g[i]);
    }
  }
  return (double)acc;
}

double EdgeForm::quad(std::span<const double> f) const {
  long double acc = 0.0L;
  for (std::size_t e = 0; e < w.size(); ++e) {
    long double d = f[i[e]] - f[j[e]];
    acc += (long double)w[e] * d * d;
  }
  return (double)acc;
}

double EdgeForm::bilinear(std::span<const double> f, std::span<const double> g) const {
  long double acc = 0.0L;
  for (std::size_t e = 0; e < w.size(); ++e)
    acc += (long double)w[e] * (f[i[e]] - f[j[e]]) * (g[i[e]] - g[j[e]]);
  return (double)acc;
}

EdgeForm edge_form(const SparseGenerator& gen, const DiscreteMeasure& nu) {
  EdgeForm form;
  form.n = gen.n_states;
  for (std::uint64_t a = 0; a < gen.n_states; ++a) {
    double p = nu.prob(a);
    for (std::uint64_t t = gen.row_ptr[a]; t < gen.row_ptr[a + 1]; ++t) {
      std::uint32_t b = gen.col[t];
      if (b <= a) continue;  // keep one orientation per unordered pair
      form.i.push_back(static_cast<std::uint32_t>(a));
      form.j.push_back(b);
      form.w.push_back(p * gen.rate[t]);
    }
  }
  return form;
}

double reversibility_defect(const SparseGenerator& gen, const DiscreteMeasure& nu) {
  if (nu.size() != gen.n_states) throw DomainError("measure does not match the generator");
  // log nu_i + log r_ij vs log nu_j + log r_ji for each unordered pair.
  double worst = 0.0;
  for (std::uint64_t a = 0; a < gen.n_states; ++a) {
    for (std::uint64_t t = gen.row_ptr[a]; t < gen.row_ptr[a + 1]; ++t) {
      std::uint32_t b = gen.col[t];
      if (b <= a) continue;
      // find the reverse transition b -> a
      double r_back = 0.0;
      for (std::uint64_t u = gen.row_ptr[b]; u < gen.row_ptr[b + 1]; ++u)
        if (gen.col[u] == a) {
          r_back = gen.rate[u];
          break;
        }
      if (r_back == 0.0) return std::numeric_limits<double>::infinity();
      double lhs = nu.log_prob(a) + std::log(gen.rate[t]);
      double rhs = nu.log_prob(b) + std::log(r_back);
      worst = std::max(worst, std::abs(std::expm1(lhs - rhs)));
    }
  }
  return worst;
}

double row_sum_defect(const SparseGenerator& gen) {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < gen.n_states; ++i) {
    long double acc = gen.diagonal[i];
    double scale = std::abs(gen.diagonal[i]);
    for (std::uint64_t t = gen.row_ptr[i]; t < gen.row_ptr[i + 1]; ++t) {
      acc += gen.rate[t];
      scale = std::max(scale, gen.rate[t]);
    }
    if (scale > 0.0) worst = std::max(worst, std::abs((double)acc) / scale);
  }
  return worst;
}

}  // namespace zrlab
