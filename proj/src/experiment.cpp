#include "zrlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zrlab/decomposition.hpp"
#include "zrlab/ensembles.hpp"
#include "zrlab/errors.hpp"
#include "zrlab/generator.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/report.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/simulate.hpp"
#include "zrlab/site_law.hpp"
#include "zrlab/spectral.hpp"

namespace zrlab {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct Violation {
  std::string check;
  ordered_json witness;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  for (const auto& p : split_list(s)) {
    if (p.empty()) throw UsageError("empty entry in list for key '" + key + "'");
    try {
      std::size_t used = 0;
      int v = std::stoi(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("cannot parse integer '" + p + "' for key '" + key + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s,
                                          const std::string& key) {
  std::vector<std::uint64_t> out;
  for (const auto& p : split_list(s)) {
    if (p.empty()) throw UsageError("empty entry in list for key '" + key + "'");
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      out.push_back(static_cast<std::uint64_t>(v));
    } catch (const std::exception&) {
      throw UsageError("cannot parse seed '" + p + "' for key '" + key + "'");
    }
  }
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse number '" + s + "' for key '" + key + "'");
  }
}

const std::set<std::string> kExperiments = {
    "measures",  "gap",      "lsi",        "decomposition",
    "ensembles", "simulate", "verify-all", "report"};

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream out;
  // The output directory is deliberately absent: the hash identifies the
  // experiment, not where its files land.
  out << "experiment=" << c.experiment << '\n'
      << "horizon=" << format_full(c.horizon) << '\n'
      << "L=" << join_ints(c.sites) << '\n'
      << "N=" << join_ints(c.particles) << '\n'
      << "rate=" << c.rate_spec << '\n'
      << "replicas=" << c.replicas << '\n'
      << "rho0=" << format_full(c.rho0) << '\n'
      << "seed=" << join_u64(c.seeds) << '\n'
      << "threads=" << c.threads << '\n'
      << "timings=" << (c.timings ? "true" : "false") << '\n'
      << "tol=" << format_full(c.tol) << '\n'
      << "wavenumber=" << c.wavenumber << '\n';
  return out.str();
}

std::vector<std::string> rate_battery(const ExperimentConfig& c) {
  if (!c.rate_spec.empty()) return {c.rate_spec};
  return {"linear", "staircase:2"};
}

int table_len_for(int max_particles) { return std::max(64, max_particles + 4); }

std::vector<int> default_or(const std::vector<int>& given, std::vector<int> fallback) {
  return given.empty() ? std::move(fallback) : given;
}

std::vector<int> iota_range(int lo, int hi) {
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

std::vector<int> spread_occupancy(int n_sites, int particles) {
  std::vector<int> eta(static_cast<std::size_t>(n_sites), 0);
  for (int p = 0; p < particles; ++p)
    ++eta[static_cast<std::size_t>(p % n_sites)];
  return eta;
}

// ---------------------------------------------------------------- measures

CsvTable measures_table(const ExperimentConfig& cfg,
                        const std::vector<std::string>& rate_specs,
                        std::vector<Violation>& viols) {
  CsvTable t;
  t.header = {"quantity", "rate", "L", "N", "rho", "value"};
  std::vector<int> sites = default_or(cfg.sites, {2, 3, 4});
  std::vector<int> particles = default_or(cfg.particles, {2, 4, 6});
  int max_n = *std::max_element(particles.begin(), particles.end());

  for (const auto& rs : rate_specs) {
    RateFunction rate = rate_from_spec(rs, table_len_for(max_n));
    for (int l_sites : sites) {
      for (int n : particles) {
        Sector sector(Box::segment(l_sites), n);
        DiscreteMeasure nu = canonical_measure(sector, rate);
        SparseGenerator gen = assemble_generator(sector, rate);
        double rev = reversibility_defect(gen, nu);
        double row = row_sum_defect(gen);
        auto cell = [&](const char* q, double v) {
          t.rows.push_back({q, rs, std::to_string(l_sites), std::to_string(n),
                            "", format_full(v)});
        };
        cell("reversibility_defect", rev);
        cell("row_sum_defect", row);
        if (rev > cfg.tol)
          viols.push_back({"detailed_balance",
                           {{"rate", rs}, {"L", l_sites}, {"N", n}, {"defect", rev}}});
        if (row > cfg.tol)
          viols.push_back({"generator_row_sums",
                           {{"rate", rs}, {"L", l_sites}, {"N", n}, {"defect", row}}});
      }
    }
    for (const auto& r : density_scan(rate, 0.1, 10.0, 13)) {
      auto cell = [&](const char* q, double v) {
        t.rows.push_back({q, rs, "0", "0", format_short(r.rho), format_full(v)});
      };
      cell("alpha", r.alpha);
      cell("sigma2", r.sigma2);
      cell("alpha_over_rho", r.alpha_over_rho);
      cell("sigma2_over_rho", r.sigma2_over_rho);
      if (!(r.alpha_over_rho > 0.0) || !std::isfinite(r.alpha_over_rho))
        viols.push_back({"fugacity_ratio_positive",
                         {{"rate", rs}, {"rho", r.rho}, {"value", r.alpha_over_rho}}});
      if (!(r.sigma2_over_rho > 0.0) || !std::isfinite(r.sigma2_over_rho))
        viols.push_back({"variance_ratio_positive",
                         {{"rate", rs}, {"rho", r.rho}, {"value", r.sigma2_over_rho}}});
    }
  }
  return t;
}

// ---------------------------------------------------------------- spectral

CsvTable spectral_table(const ExperimentConfig& cfg,
                        const std::vector<std::string>& rate_specs,
                        const std::vector<int>& sites,
                        const std::vector<int>& particles, bool with_lsi,
                        std::vector<Violation>& viols) {
  CsvTable t;
  t.header = {"rate", "L", "N", "states", "gap", "used_dense",
              "lsi_estimate", "lsi_certified", "lsi_degenerate", "seconds"};
  int max_n = *std::max_element(particles.begin(), particles.end());
  for (const auto& rs : rate_specs) {
    RateFunction rate = rate_from_spec(rs, table_len_for(max_n));
    for (int l_sites : sites) {
      for (int n : particles) {
        auto t0 = std::chrono::steady_clock::now();
        Sector sector(Box::segment(l_sites), n);
        DiscreteMeasure nu = canonical_measure(sector, rate);
        SparseGenerator gen = assemble_generator(sector, rate);
        EdgeForm form = edge_form(gen, nu);
        GapOptions go;
        go.seed = cfg.seeds.front();
        GapResult gap = spectral_gap(form, nu, go);
        std::string lsi_est, lsi_cert, lsi_deg;
        if (with_lsi) {
          LsiOptions lo;
          lo.seed = cfg.seeds.front();
          lo.threads = cfg.threads;
          LsiResult lsi = lsi_constant(form, nu, lo, &gap.witness);
          lsi_est = format_full(lsi.estimate);
          lsi_cert = format_full(lsi.certified_lower);
          lsi_deg = lsi.degenerate ? "1" : "0";
        }
        double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        char secbuf[32];
        std::snprintf(secbuf, sizeof secbuf, "%.3f", cfg.timings ? wall : 0.0);
        t.rows.push_back({rs, std::to_string(l_sites), std::to_string(n),
                          std::to_string(sector.size()), format_full(gap.gap),
                          gap.used_dense ? "1" : "0", lsi_est, lsi_cert,
                          lsi_deg, secbuf});
        if (!(gap.gap > 0.0))
          viols.push_back({"nonpositive_gap",
                           {{"rate", rs}, {"L", l_sites}, {"N", n}, {"gap", gap.gap}}});
      }
    }
  }
  return t;
}

// ----------------------------------------------------------- decomposition

CsvTable decomposition_table(const ExperimentConfig& cfg,
                             const std::vector<std::string>& rate_specs,
                             const std::vector<int>& diag_sites,
                             const std::vector<int>& diag_particles,
                             int functions_per_cell) {
  CsvTable t;
  t.header = {"quantity", "rate", "L", "N", "n", "value"};
  int max_n = *std::max_element(diag_particles.begin(), diag_particles.end());
  for (const auto& rs : rate_specs) {
    RateFunction rate = rate_from_spec(rs, table_len_for(max_n));
    auto rows = diagnostics_scan(rate, diag_sites, diag_particles,
                                 functions_per_cell, cfg.seeds.front());
    for (const auto& r : rows)
      t.rows.push_back({r.quantity, rs, std::to_string(r.sites),
                        std::to_string(r.particles), std::to_string(r.n),
                        format_full(r.value)});
  }
  return t;
}

struct BatteryResult {
  double detailed_balance = 0.0;
  double entropy_decomposition = 0.0;
  double tensor_slack_min = 1e300;
  double conditional_dirichlet = 0.0;
  double gradient_lower = 0.0;
  double gradient_upper = 0.0;
  double ab_reconstruction = 0.0;
  double shift_identity = 0.0;
  double inverse_rate = 0.0;
  int cells = 0;
  int functions_per_cell = 0;
};

BatteryResult identity_battery(const ExperimentConfig& cfg,
                               const std::vector<std::string>& rate_specs,
                               const std::vector<int>& even_sites,
                               const std::vector<int>& n_grid,
                               int functions_per_cell,
                               std::vector<Violation>& viols) {
  BatteryResult out;
  out.functions_per_cell = functions_per_cell;
  int max_n = *std::max_element(n_grid.begin(), n_grid.end());
  for (const auto& rs : rate_specs) {
    RateFunction rate = rate_from_spec(rs, table_len_for(max_n));
    for (int l_sites : even_sites) {
      for (int n_total : n_grid) {
        ++out.cells;
        Sector sector(Box::segment(l_sites), n_total);
        DiscreteMeasure nu = canonical_measure(sector, rate);
        SparseGenerator gen = assemble_generator(sector, rate);

        double rev = reversibility_defect(gen, nu);
        out.detailed_balance = std::max(out.detailed_balance, rev);
        if (rev > cfg.tol)
          viols.push_back({"detailed_balance",
                           {{"rate", rs}, {"L", l_sites}, {"N", n_total}, {"defect", rev}}});

        SplitSector split(sector, rate, l_sites / 2);
        const DiscreteMeasure& gamma = split.gamma();
        std::mt19937_64 rng(cfg.seeds.front() ^ fnv1a(rs) ^
                            (static_cast<std::uint64_t>(l_sites) << 40) ^
                            (static_cast<std::uint64_t>(n_total) << 20));
        std::normal_distribution<double> gauss;

        std::vector<double> f(sector.size()), sqrtf(sector.size());
        std::vector<double> cond_mean(static_cast<std::size_t>(n_total) + 1);
        std::vector<double> cond_ent(static_cast<std::size_t>(n_total) + 1);
        auto complain = [&](const char* check, double value, int n_level) {
          viols.push_back({check,
                           {{"rate", rs},
                            {"L", l_sites},
                            {"N", n_total},
                            {"n", n_level},
                            {"residual", value}}});
        };

        for (int trial = 0; trial < functions_per_cell; ++trial) {
          for (std::uint64_t s = 0; s < sector.size(); ++s) {
            f[s] = std::exp(gauss(rng));
            sqrtf[s] = std::sqrt(f[s]);
          }
          double ent = entropy(nu, f);
          double ent_scale = std::max(ent, 1e-300);
          double mean_cond_ent = 0.0;
          for (int n = 0; n <= n_total; ++n) {
            cond_mean[static_cast<std::size_t>(n)] = split.conditional_expectation(f, n);
            cond_ent[static_cast<std::size_t>(n)] = split.conditional_entropy(f, n);
            mean_cond_ent += gamma.prob(static_cast<std::size_t>(n)) *
                             cond_ent[static_cast<std::size_t>(n)];
          }
          double ent_of_means = entropy(gamma, cond_mean);
          double split_resid =
              std::abs(ent - mean_cond_ent - ent_of_means) / ent_scale;
          out.entropy_decomposition = std::max(out.entropy_decomposition, split_resid);
          if (split_resid > cfg.tol) complain("entropy_decomposition", split_resid, -1);

          double blocks = split.mean_block_entropy_left(f) +
                          split.mean_block_entropy_right(f);
          double tensor_slack = (blocks - mean_cond_ent) / ent_scale;
          out.tensor_slack_min = std::min(out.tensor_slack_min, tensor_slack);
          if (tensor_slack < -cfg.tol) complain("entropy_tensor_bound", tensor_slack, -1);

          double full_form = dirichlet_form(gen, nu, sqrtf, sqrtf);
          double tower = split.cross_bond_dirichlet(nu, sqrtf, sqrtf);
          for (int n = 0; n <= n_total; ++n)
            tower += gamma.prob(static_cast<std::size_t>(n)) *
                     split.conditional_dirichlet_within(sqrtf, sqrtf, n);
          double tower_resid =
              std::abs(full_form - tower) / std::max(full_form, 1e-300);
          out.conditional_dirichlet = std::max(out.conditional_dirichlet, tower_resid);
          if (tower_resid > cfg.tol) complain("conditional_dirichlet_tower", tower_resid, -1);

          for (int n = 1; n <= n_total; ++n) {
            auto rep = split.gradient_representation(f, n);
            // The gradient is a difference of conditional means, so
            // residuals are scaled by the means, not by the difference.
            double scale = std::max({std::abs(cond_mean[static_cast<std::size_t>(n)]),
                                     std::abs(cond_mean[static_cast<std::size_t>(n - 1)]),
                                     1e-300});
            double gl = std::abs(rep.direct - rep.via_lower) / scale;
            double gu = std::abs(rep.direct - rep.via_upper) / scale;
            out.gradient_lower = std::max(out.gradient_lower, gl);
            out.gradient_upper = std::max(out.gradient_upper, gu);
            if (gl > cfg.tol) complain("gradient_representation_lower", gl, n);
            if (gu > cfg.tol) complain("gradient_representation_upper", gu, n);

            auto parts = split.ab_split(f, n);
            double ar = std::abs(parts.a + parts.b - rep.direct) / scale;
            out.ab_reconstruction = std::max(out.ab_reconstruction, ar);
            if (ar > cfg.tol) complain("ab_reconstruction", ar, n);
          }
        }
      }
    }

    IdentityReport ids = identity_suite(rate, {0.0, 0.5, 1.5});
    out.shift_identity = std::max(out.shift_identity, ids.max_shift_residual);
    out.inverse_rate = std::max(out.inverse_rate, ids.max_inverse_rate_residual);
    if (ids.max_shift_residual > 1e-10)
      viols.push_back({"shift_identity", {{"rate", rs}, {"residual", ids.max_shift_residual}}});
    if (ids.max_inverse_rate_residual > 1e-10)
      viols.push_back({"inverse_rate_identity",
                       {{"rate", rs}, {"residual", ids.max_inverse_rate_residual}}});
  }
  return out;
}

ordered_json battery_json(const BatteryResult& b,
                          const std::vector<std::string>& rate_specs,
                          const std::vector<int>& even_sites,
                          const std::vector<int>& n_grid) {
  ordered_json j;
  j["schema"] = "zrlab-identities-v1";
  j["grid"] = {{"rates", rate_specs},
               {"L", even_sites},
               {"N", n_grid},
               {"functions_per_cell", b.functions_per_cell},
               {"cells", b.cells}};
  j["max_residuals"] = {{"detailed_balance", b.detailed_balance},
                        {"entropy_decomposition", b.entropy_decomposition},
                        {"conditional_dirichlet", b.conditional_dirichlet},
                        {"gradient_lower", b.gradient_lower},
                        {"gradient_upper", b.gradient_upper},
                        {"ab_reconstruction", b.ab_reconstruction},
                        {"shift_identity", b.shift_identity},
                        {"inverse_rate", b.inverse_rate}};
  j["min_slacks"] = {{"entropy_tensor_bound", b.tensor_slack_min}};
  return j;
}

// -------------------------------------------------------------- ensembles

ordered_json ensembles_json(const ExperimentConfig& cfg,
                            const std::vector<std::string>& rate_specs,
                            const std::vector<int>& llt_volumes,
                            std::vector<Violation>& viols) {
  ordered_json root;
  root["schema"] = "zrlab-ensembles-v1";
  ordered_json per_rate = ordered_json::array();

  for (const auto& rs : rate_specs) {
    int max_vol = *std::max_element(llt_volumes.begin(), llt_volumes.end());
    RateFunction rate = rate_from_spec(rs, table_len_for(4 * max_vol > 256 ? 4 * max_vol : 256));
    ordered_json jr;
    jr["rate"] = rs;

    // Moment-generating falsification suite. The geometric tail certificate
    // at t=2 needs a much longer table than the count laws do.
    RateFunction mgf_rate = rate_from_spec(rs, std::max(1600, table_len_for(4 * max_vol)));
    MgfSuiteResult mgf =
        mgf_suite(mgf_rate, {0.25, 1.0, 4.0}, {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0},
                  cfg.seeds.front());
    ordered_json jm;
    jm["checks_run"] = mgf.checks_run;
    jm["fitted_growth_constant"] = mgf.fitted_growth_constant;
    ordered_json jimp = ordered_json::array();
    for (const auto& ic : mgf.implied)
      jimp.push_back({{"L", ic.sites}, {"N", ic.particles}, {"a_c", ic.a_c}, {"a_h", ic.a_h}});
    jm["implied_constants"] = jimp;
    ordered_json jviol = ordered_json::array();
    for (const auto& v : mgf.violations) {
      jviol.push_back({{"check", v.check}, {"rho", v.rho}, {"t", v.t},
                       {"value", v.value}, {"bound", v.bound}});
      viols.push_back({v.check, {{"rate", rs}, {"rho", v.rho}, {"t", v.t},
                                 {"value", v.value}, {"bound", v.bound}}});
    }
    jm["violations"] = jviol;
    jr["mgf_suite"] = jm;

    // Product-measure identities.
    IdentityReport ids = identity_suite(rate, {0.0, 0.5, 1.0, 2.0});
    ordered_json jid;
    jid["max_shift_residual"] = ids.max_shift_residual;
    jid["max_inverse_rate_residual"] = ids.max_inverse_rate_residual;
    ordered_json jrows = ordered_json::array();
    for (const auto& r : ids.rows)
      jrows.push_back({{"alpha", r.alpha},
                       {"shift_residual", r.shift_residual},
                       {"inverse_rate_residual", r.inverse_rate_residual},
                       {"inverse_rate_skipped", r.inverse_rate_skipped},
                       {"h_variance_times_rho", r.h_variance_times_rho}});
    jid["rows"] = jrows;
    jr["identities"] = jid;
    if (ids.max_shift_residual > 1e-10)
      viols.push_back({"shift_identity", {{"rate", rs}, {"residual", ids.max_shift_residual}}});
    if (ids.max_inverse_rate_residual > 1e-10)
      viols.push_back({"inverse_rate_identity",
                       {{"rate", rs}, {"residual", ids.max_inverse_rate_residual}}});

    // Local-limit errors: Poisson regime at fixed small N, Gaussian regime
    // at fixed density.
    ordered_json jl;
    ordered_json jpois = ordered_json::array();
    for (int v : llt_volumes) {
      double rho = 2.0 / v;
      SiteLaw site = grand_canonical_site_law(rate, invert_fugacity(rate, rho));
      CountLaw law = total_count_law(site, v);
      LltErrors err = llt_errors(law, 2);
      jpois.push_back({{"volume", v}, {"N", 2}, {"poisson_err", err.poisson_err},
                       {"scaled", err.poisson_err * v}});
      if (!std::isfinite(err.poisson_err))
        viols.push_back({"poisson_llt_finite", {{"rate", rs}, {"volume", v}}});
    }
    jl["poisson"] = jpois;
    ordered_json jgauss = ordered_json::array();
    for (double rho : {1.0, 4.0}) {
      for (int v : llt_volumes) {
        SiteLaw site = grand_canonical_site_law(rate, invert_fugacity(rate, rho));
        CountLaw law = total_count_law(site, v);
        int n_at = static_cast<int>(std::lround(rho * v));
        LltErrors err = llt_errors(law, n_at);
        double s2v = site.variance * v;
        jgauss.push_back({{"volume", v}, {"rho", rho}, {"gaussian_err", err.gaussian_err},
                          {"scaled", err.gaussian_err * std::sqrt(s2v)},
                          {"sigma2_volume", s2v}});
        if (!std::isfinite(err.gaussian_err))
          viols.push_back({"gaussian_llt_finite", {{"rate", rs}, {"volume", v}, {"rho", rho}}});
      }
    }
    jl["gaussian"] = jgauss;
    jr["local_limit"] = jl;

    // Equivalence-of-ensembles gaps at rho = 1.
    ordered_json jeq = ordered_json::array();
    for (int v : llt_volumes) {
      double gap = equivalence_gap(rate, v, v);
      double rho = 1.0;
      jeq.push_back({{"volume", v}, {"N", v}, {"gap", gap},
                     {"scaled", gap * v / std::sqrt(1.0 + rho)}});
      if (!std::isfinite(gap))
        viols.push_back({"equivalence_gap_finite", {{"rate", rs}, {"volume", v}}});
    }
    jr["equivalence_gap"] = jeq;

    per_rate.push_back(jr);
  }

  // Entropy inequality and Rothaus slacks on random finite spaces (rate
  // independent, run once).
  std::mt19937_64 rng(cfg.seeds.front() + 7);
  std::normal_distribution<double> gauss;
  double min_plain = 1e300, min_sym = 1e300, min_roth = 1e300;
  int ent_trials = 0, roth_trials = 0;
  for (int trial = 0; trial < 334; ++trial) {
    std::vector<double> w(20), f(20), g(20);
    for (int i = 0; i < 20; ++i) {
      w[static_cast<std::size_t>(i)] = std::exp(gauss(rng));
      f[static_cast<std::size_t>(i)] = std::exp(gauss(rng));
      g[static_cast<std::size_t>(i)] = gauss(rng);
    }
    DiscreteMeasure mu = DiscreteMeasure::from_weights(w);
    for (double t : {0.1, 1.0, 10.0}) {
      EntropySlacks s = entropy_inequality_check(mu, f, g, t);
      min_plain = std::min(min_plain, s.plain);
      min_sym = std::min(min_sym, s.symmetric);
      ++ent_trials;
      if (s.plain < -1e-12 || s.symmetric < -1e-12)
        viols.push_back({"entropy_inequality",
                         {{"trial", trial}, {"t", t}, {"plain", s.plain},
                          {"symmetric", s.symmetric}}});
    }
    double rs_slack = rothaus_slack(mu, f);
    min_roth = std::min(min_roth, rs_slack);
    ++roth_trials;
    if (rs_slack < -1e-12)
      viols.push_back({"rothaus_inequality", {{"trial", trial}, {"slack", rs_slack}}});
  }
  root["rates"] = per_rate;
  root["entropy_inequality"] = {{"trials", ent_trials},
                                {"min_slack_plain", min_plain},
                                {"min_slack_symmetric", min_sym}};
  root["rothaus"] = {{"trials", roth_trials}, {"min_slack", min_roth}};
  return root;
}

CsvTable regimes_table(const ExperimentConfig& cfg,
                       const std::vector<std::string>& rate_specs,
                       const std::vector<int>& volumes,
                       std::vector<Violation>& viols) {
  CsvTable t;
  t.header = {"regime", "rate", "volume", "N", "sup_ratio"};
  int max_vol = *std::max_element(volumes.begin(), volumes.end());
  for (const auto& rs : rate_specs) {
    RateFunction rate = rate_from_spec(rs, table_len_for(4 * max_vol > 256 ? 4 * max_vol : 256));
    for (const auto& row : regime_scan(rate, volumes, 0.5, cfg.rho0)) {
      t.rows.push_back({row.regime, rs, std::to_string(row.volume),
                        std::to_string(row.particles), format_full(row.sup_ratio)});
      if (!std::isfinite(row.sup_ratio) || !(row.sup_ratio > 0.0))
        viols.push_back({"ensemble_ratio_finite",
                         {{"rate", rs}, {"volume", row.volume},
                          {"N", row.particles}, {"value", row.sup_ratio}}});
    }
  }
  return t;
}

// --------------------------------------------------------------- simulate

CsvTable simulate_table(const ExperimentConfig& cfg,
                        const std::vector<std::string>& rate_specs,
                        ordered_json& summary, std::vector<Violation>& viols) {
  CsvTable t;
  t.header = {"t", "mode_value", "N", "total_rate", "rate_sum"};
  int l_sites = cfg.sites.empty() ? 16 : cfg.sites.front();
  int n = cfg.particles.empty() ? l_sites : cfg.particles.front();
  const std::string& rs = rate_specs.front();
  RateFunction rate = rate_from_spec(rs, table_len_for(n));
  double gap1 = 2.0 * (1.0 - std::cos(3.14159265358979323846 / l_sites));
  KmcOptions o;
  o.horizon = cfg.horizon > 0.0 ? cfg.horizon : 30.0 / gap1;
  o.seed = cfg.seeds.front();
  o.wavenumber = cfg.wavenumber;
  KmcSummary run = kmc_run(Box::segment(l_sites), rate,
                           spread_occupancy(l_sites, n), o);
  for (const auto& s : run.samples)
    t.rows.push_back({format_short(s.time), format_full(s.slow_mode),
                      std::to_string(n), format_full(s.total_rate),
                      format_full(s.rate_sum)});

  int final_n = 0;
  for (int v : run.final_occupancy) final_n += v;
  summary["trajectory"] = {{"rate", rs},
                           {"L", l_sites},
                           {"N", n},
                           {"events", run.events},
                           {"final_time", run.final_time},
                           {"max_rate_drift", run.max_rate_drift},
                           {"truncated", run.truncated}};
  if (final_n != n)
    viols.push_back({"particle_conservation",
                     {{"rate", rs}, {"expected", n}, {"found", final_n}}});
  if (run.max_rate_drift > 1e-9)
    viols.push_back({"rate_cache_drift",
                     {{"rate", rs}, {"drift", run.max_rate_drift}}});
  return t;
}

void law_check_summary(const ExperimentConfig& cfg, ordered_json& summary,
                       std::vector<Violation>& viols) {
  RateFunction rate = rate_from_spec("linear", 64);
  LawCheckResult law =
      empirical_law_check(Box::segment(3), rate, 3, 30000.0, cfg.seeds.front());
  summary["law_check"] = {{"rate", "linear"},
                          {"L", 3},
                          {"N", 3},
                          {"tv", law.tv},
                          {"tolerance", law.tolerance},
                          {"events", law.events},
                          {"under_sampled", law.under_sampled}};
  if (!law.under_sampled && law.tv > 0.05)
    viols.push_back({"stationary_law_mismatch",
                     {{"tv", law.tv}, {"tolerance", law.tolerance}}});
}

std::string iso_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  ExperimentConfig cfg;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const std::exception& e) {
      throw UsageError(std::string("config JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config JSON must be an object");
    for (const auto& [key, value] : j.items()) {
      std::string as_text;
      if (value.is_string()) {
        as_text = value.get<std::string>();
      } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i) as_text.push_back(',');
          if (value[i].is_string())
            as_text += value[i].get<std::string>();
          else
            as_text += value[i].dump();
        }
      } else {
        as_text = value.dump();
      }
      apply_config_entry(cfg, key, as_text);
    }
    return cfg;
  }

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t lo = line.find_first_not_of(" \t\r");
    if (lo == std::string::npos) continue;
    std::size_t hi = line.find_last_not_of(" \t\r");
    line = line.substr(lo, hi - lo + 1);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       " is not key=value: " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back())))
      key.pop_back();
    std::size_t vlo = value.find_first_not_of(" \t");
    value = vlo == std::string::npos ? "" : value.substr(vlo);
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "experiment") {
    cfg.experiment = value;
  } else if (key == "rate") {
    cfg.rate_spec = value;
  } else if (key == "L") {
    cfg.sites = parse_int_list(value, key);
  } else if (key == "N") {
    cfg.particles = parse_int_list(value, key);
  } else if (key == "seed" || key == "seeds") {
    cfg.seeds = parse_u64_list(value, key);
  } else if (key == "tol") {
    cfg.tol = parse_double(value, key);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_double(value, key));
  } else if (key == "timings") {
    if (value == "true" || value == "1")
      cfg.timings = true;
    else if (value == "false" || value == "0")
      cfg.timings = false;
    else
      throw UsageError("timings must be true/false, got '" + value + "'");
  } else if (key == "rho0") {
    cfg.rho0 = parse_double(value, key);
  } else if (key == "horizon") {
    cfg.horizon = parse_double(value, key);
  } else if (key == "wavenumber") {
    cfg.wavenumber = static_cast<int>(parse_double(value, key));
  } else if (key == "replicas") {
    cfg.replicas = static_cast<int>(parse_double(value, key));
  } else {
    throw UsageError("unknown config key: " + key);
  }
}

void validate_config(const ExperimentConfig& cfg) {
  if (kExperiments.find(cfg.experiment) == kExperiments.end())
    throw UsageError("unknown experiment '" + cfg.experiment +
                     "' (expected one of measures, gap, lsi, decomposition, "
                     "ensembles, simulate, verify-all, report)");
  if (cfg.seeds.empty()) throw UsageError("seed list is empty");
  if (!(cfg.tol > 0.0)) throw UsageError("tol must be positive");
  if (cfg.threads < 1) throw UsageError("threads must be >= 1");
  if (cfg.replicas < 1) throw UsageError("replicas must be >= 1");
  if (!(cfg.rho0 > 0.0)) throw UsageError("rho0 must be positive");
  for (int l_sites : cfg.sites)
    if (l_sites < 1) throw UsageError("L entries must be >= 1");
  for (int n : cfg.particles)
    if (n < 0) throw UsageError("N entries must be >= 0");
  if (!cfg.rate_spec.empty()) {
    try {
      rate_from_spec(cfg.rate_spec, 8);
    } catch (const Error& e) {
      throw UsageError(std::string("bad rate spec: ") + e.what());
    }
  }
}

int run_experiment(const ExperimentConfig& config) {
  try {
    validate_config(config);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  const ExperimentConfig& cfg = config;
  auto t_start = std::chrono::steady_clock::now();
  std::vector<Violation> viols;
  std::vector<std::string> outputs;
  ordered_json extra;
  const std::string& ex = cfg.experiment;

  try {
    ensure_directory(cfg.out_dir);
    auto rates = rate_battery(cfg);
    bool all = ex == "verify-all";

    if (ex == "report") {
      int code = emit_scaling_report(cfg.out_dir + "/spectral.csv", cfg.out_dir);
      if (code != 0) return code;
      outputs = {"scaling.csv", "scaling_summary.txt"};
    }

    if (ex == "measures" || all) {
      CsvTable t = measures_table(cfg, rates, viols);
      atomic_write(cfg.out_dir + "/measures.csv", to_csv(t));
      outputs.push_back("measures.csv");
    }

    if (ex == "gap" || ex == "lsi" || all) {
      bool with_lsi = ex != "gap";
      std::vector<int> sites = default_or(
          cfg.sites, all ? std::vector<int>{2, 3, 4}
                         : (with_lsi ? std::vector<int>{2, 3, 4}
                                     : std::vector<int>{2, 3, 4, 5, 6}));
      std::vector<int> particles =
          default_or(cfg.particles, all ? std::vector<int>{2, 4, 6} : iota_range(1, 8));
      CsvTable t = spectral_table(cfg, rates, sites, particles, with_lsi, viols);
      atomic_write(cfg.out_dir + "/spectral.csv", to_csv(t));
      outputs.push_back("spectral.csv");
    }

    if (ex == "decomposition" || all) {
      std::vector<int> diag_sites =
          default_or(cfg.sites, all ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 6});
      std::vector<int> diag_particles = default_or(
          cfg.particles, all ? std::vector<int>{4, 8} : std::vector<int>{4, 8, 16});
      for (int l_sites : diag_sites)
        if (l_sites % 2 != 0)
          throw UsageError("decomposition diagnostics need even L");
      CsvTable t = decomposition_table(cfg, rates, diag_sites, diag_particles,
                                       all ? 10 : 20);
      atomic_write(cfg.out_dir + "/decomposition.csv", to_csv(t));
      outputs.push_back("decomposition.csv");

      std::vector<int> battery_sites = all ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 6};
      std::vector<int> battery_ns = all ? iota_range(1, 6) : iota_range(1, 8);
      BatteryResult battery = identity_battery(cfg, rates, battery_sites,
                                               battery_ns, all ? 25 : 50, viols);
      ordered_json jb = battery_json(battery, rates, battery_sites, battery_ns);
      atomic_write(cfg.out_dir + "/identities.json", jb.dump(2) + "\n");
      outputs.push_back("identities.json");
    }

    if (ex == "ensembles" || all) {
      std::vector<int> volumes = default_or(
          cfg.sites, all ? std::vector<int>{8, 16, 32} : std::vector<int>{8, 16, 32, 64});
      ordered_json je = ensembles_json(cfg, rates, volumes, viols);
      atomic_write(cfg.out_dir + "/ensembles.json", je.dump(2) + "\n");
      outputs.push_back("ensembles.json");
      CsvTable t = regimes_table(cfg, rates, volumes, viols);
      atomic_write(cfg.out_dir + "/regimes.csv", to_csv(t));
      outputs.push_back("regimes.csv");
    }

    if (ex == "simulate" || all) {
      CsvTable t = simulate_table(cfg, rates, extra, viols);
      atomic_write(cfg.out_dir + "/simulate.csv", to_csv(t));
      outputs.push_back("simulate.csv");
      if (all) law_check_summary(cfg, extra, viols);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const CapError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return 3;
  } catch (const ViolationError& e) {
    viols.push_back({"runtime_violation",
                     {{"what", e.what()}, {"witness", e.witness}}});
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  std::string canon = canonical_config(cfg);
  char hashbuf[32];
  std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canon)));

  ordered_json manifest;
  manifest["tool"] = "zrlab";
  manifest["version"] = kVersion;
  manifest["compiler"] = __VERSION__;
  manifest["experiment"] = cfg.experiment;
  {
    ordered_json jc;
    std::istringstream lines(canon);
    std::string line;
    while (std::getline(lines, line)) {
      std::size_t eq = line.find('=');
      jc[line.substr(0, eq)] = line.substr(eq + 1);
    }
    manifest["config"] = jc;
  }
  manifest["config_hash"] = hashbuf;
  manifest["seeds"] = cfg.seeds;
  manifest["wall_seconds"] = wall;
  manifest["generated_utc"] = iso_utc_now();
  manifest["outputs"] = outputs;
  manifest["violations"] = viols.size();
  if (!extra.empty()) manifest["summary"] = extra;
  atomic_write(cfg.out_dir + "/manifest.json", manifest.dump(2) + "\n");

  if (!viols.empty()) {
    ordered_json jv = ordered_json::array();
    for (const auto& v : viols) {
      jv.push_back({{"check", v.check}, {"witness", v.witness}});
      std::fprintf(stderr, "violation: %s %s\n", v.check.c_str(),
                   v.witness.dump().c_str());
    }
    atomic_write(cfg.out_dir + "/violations.json", jv.dump(2) + "\n");
    return 1;
  }
  return 0;
}

int emit_scaling_report(const std::string& spectral_csv_path,
                        const std::string& out_dir) {
  std::ifstream in(spectral_csv_path);
  if (!in) {
    std::fprintf(stderr, "usage error: cannot open %s (run gap/lsi/verify-all first)\n",
                 spectral_csv_path.c_str());
    return 2;
  }
  std::string line;
  if (!std::getline(in, line)) {
    std::fprintf(stderr, "usage error: %s is empty\n", spectral_csv_path.c_str());
    return 2;
  }
  auto split_cells = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    cells.push_back(cur);
    return cells;
  };
  auto header = split_cells(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  int c_rate = col("rate"), c_l = col("L"), c_n = col("N"), c_gap = col("gap"),
      c_lsi = col("lsi_estimate");
  if (c_rate < 0 || c_l < 0 || c_n < 0 || c_gap < 0) {
    std::fprintf(stderr, "usage error: %s lacks spectral columns\n",
                 spectral_csv_path.c_str());
    return 2;
  }

  struct Point {
    std::string rate;
    int l_sites, n;
    double inv_gap;
    double lsi;
    bool has_lsi;
  };
  std::vector<Point> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_cells(line);
    if (static_cast<int>(cells.size()) <= std::max(c_gap, c_lsi)) continue;
    Point p;
    p.rate = cells[static_cast<std::size_t>(c_rate)];
    p.l_sites = std::stoi(cells[static_cast<std::size_t>(c_l)]);
    p.n = std::stoi(cells[static_cast<std::size_t>(c_n)]);
    double gap = std::stod(cells[static_cast<std::size_t>(c_gap)]);
    if (!(gap > 0.0)) continue;
    p.inv_gap = 1.0 / gap;
    p.has_lsi = c_lsi >= 0 && !cells[static_cast<std::size_t>(c_lsi)].empty();
    p.lsi = p.has_lsi ? std::stod(cells[static_cast<std::size_t>(c_lsi)]) : 0.0;
    points.push_back(p);
  }

  // slope of log(y) on log(L) by least squares; needs >= 3 distinct L.
  auto fit = [](const std::vector<std::pair<int, double>>& xy, double& slope,
                double& intercept) {
    std::set<int> ls;
    for (const auto& p : xy) ls.insert(p.first);
    if (ls.size() < 3 || xy.size() < 3) return false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [l_sites, y] : xy) {
      if (!(y > 0.0)) return false;
      double x = std::log(static_cast<double>(l_sites));
      double ly = std::log(y);
      sx += x;
      sy += ly;
      sxx += x * x;
      sxy += x * ly;
    }
    double n = static_cast<double>(xy.size());
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return false;
    slope = (n * sxy - sx * sy) / denom;
    intercept = (sy - slope * sx) / n;
    return true;
  };

  CsvTable t;
  t.header = {"kind", "rate", "N", "slope", "intercept", "points"};
  std::string summary;
  int fitted = 0;

  std::set<std::string> rate_names;
  for (const auto& p : points) rate_names.insert(p.rate);
  for (const auto& rate_name : rate_names) {
    std::set<int> n_values;
    for (const auto& p : points)
      if (p.rate == rate_name) n_values.insert(p.n);

    for (int kind = 0; kind < 2; ++kind) {
      const char* kind_name = kind == 0 ? "inv_gap" : "lsi";
      std::vector<std::pair<int, double>> pooled;
      for (int n : n_values) {
        std::vector<std::pair<int, double>> series;
        for (const auto& p : points) {
          if (p.rate != rate_name || p.n != n) continue;
          if (kind == 1 && !p.has_lsi) continue;
          series.push_back({p.l_sites, kind == 0 ? p.inv_gap : p.lsi});
        }
        pooled.insert(pooled.end(), series.begin(), series.end());
        double slope, intercept;
        if (fit(series, slope, intercept)) {
          ++fitted;
          t.rows.push_back({kind_name, rate_name, std::to_string(n),
                            format_short(slope), format_short(intercept),
                            std::to_string(series.size())});
          summary += std::string(kind_name) + " vs L [rate=" + rate_name +
                     ", N=" + std::to_string(n) + "]: slope " +
                     format_short(slope) + " over " +
                     std::to_string(series.size()) + " points\n";
        }
      }
      double slope, intercept;
      if (fit(pooled, slope, intercept)) {
        ++fitted;
        t.rows.push_back({kind_name, rate_name, "-1", format_short(slope),
                          format_short(intercept), std::to_string(pooled.size())});
        summary += std::string(kind_name) + " vs L [rate=" + rate_name +
                   ", pooled]: slope " + format_short(slope) + " over " +
                   std::to_string(pooled.size()) + " points\n";
      }
    }
  }

  if (fitted == 0) {
    std::fprintf(stderr,
                 "usage error: fewer than 3 distinct L values in every series; "
                 "cannot fit scaling\n");
    return 2;
  }
  atomic_write(out_dir + "/scaling.csv", to_csv(t));
  atomic_write(out_dir + "/scaling_summary.txt", summary);
  return 0;
}

}  // namespace zrlab
