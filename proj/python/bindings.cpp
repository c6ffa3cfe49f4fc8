// Python bindings. The surface is deliberately functional: rate families are
// passed as spec strings and results come back as plain python containers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "zrlab/decomposition.hpp"
#include "zrlab/ensembles.hpp"
#include "zrlab/errors.hpp"
#include "zrlab/generator.hpp"
#include "zrlab/lattice.hpp"
#include "zrlab/measure.hpp"
#include "zrlab/rates.hpp"
#include "zrlab/sector.hpp"
#include "zrlab/simulate.hpp"
#include "zrlab/site_law.hpp"
#include "zrlab/spectral.hpp"

namespace py = pybind11;
using namespace zrlab;

namespace {

RateFunction make_rate(const std::string& spec, int n_max) {
  return rate_from_spec(spec, n_max);
}

int table_len(int particles) { return std::max(64, particles + 4); }

py::dict site_law_dict(const SiteLaw& law) {
  py::dict d;
  d["alpha"] = law.alpha;
  d["log_z"] = law.log_z;
  d["pmf"] = law.pmf;
  d["mean"] = law.mean;
  d["variance"] = law.variance;
  d["tail_bound"] = law.tail_bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "zero-range dynamics laboratory";

  py::register_exception<UsageError>(m, "UsageError");
  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<TableError>(m, "TableError");

  m.def(
      "rate_values",
      [](const std::string& spec, int n_max) {
        RateFunction r = make_rate(spec, n_max);
        std::vector<double> out;
        for (int k = 0; k <= n_max; ++k) out.push_back(r.at(k));
        return out;
      },
      py::arg("spec"), py::arg("n_max"),
      "jump rates c(0..n_max) for a rate spec string");

  m.def(
      "rate_constants",
      [](const std::string& spec, int n_max) {
        RateFunction r = make_rate(spec, n_max);
        py::dict d;
        d["lipschitz_a1"] = r.lipschitz_a1;
        d["envelope_a0"] = r.envelope_a0;
        if (r.monotone_a2) d["monotone_a2"] = *r.monotone_a2;
        if (r.monotone_k0) d["monotone_k0"] = *r.monotone_k0;
        d["label"] = r.label;
        return d;
      },
      py::arg("spec"), py::arg("n_max") = 64,
      "structural constants recovered from the rate table");

  m.def(
      "fugacity",
      [](const std::string& spec, double rho) {
        return invert_fugacity(make_rate(spec, 256), rho);
      },
      py::arg("spec"), py::arg("rho"),
      "fugacity alpha with site mean rho under the product law");

  m.def(
      "site_law",
      [](const std::string& spec, double alpha) {
        return site_law_dict(grand_canonical_site_law(make_rate(spec, 256), alpha));
      },
      py::arg("spec"), py::arg("alpha"),
      "single-site product-law marginal at fugacity alpha");

  m.def(
      "sector_size",
      [](int sites, int particles) {
        return Sector(Box::segment(sites), particles).size();
      },
      py::arg("L"), py::arg("N"), "number of configurations with N particles on L sites");

  m.def(
      "sector_states",
      [](int sites, int particles) {
        Sector sec(Box::segment(sites), particles);
        std::vector<std::vector<int>> states;
        states.reserve(sec.size());
        for (std::uint64_t r = 0; r < sec.size(); ++r)
          states.push_back(sec.unrank(r));
        return states;
      },
      py::arg("L"), py::arg("N"), "all configurations in enumeration order");

  m.def(
      "canonical_probs",
      [](const std::string& spec, int sites, int particles) {
        Sector sec(Box::segment(sites), particles);
        DiscreteMeasure nu = canonical_measure(sec, make_rate(spec, table_len(particles)));
        return nu.probs();
      },
      py::arg("spec"), py::arg("L"), py::arg("N"),
      "stationary law on the fixed-N sector, enumeration order");

  m.def(
      "spectral_gap",
      [](const std::string& spec, int sites, int particles, std::uint64_t seed) {
        RateFunction rate = make_rate(spec, table_len(particles));
        Sector sec(Box::segment(sites), particles);
        DiscreteMeasure nu = canonical_measure(sec, rate);
        SparseGenerator gen = assemble_generator(sec, rate);
        GapOptions o;
        o.seed = seed;
        return spectral_gap(edge_form(gen, nu), nu, o).gap;
      },
      py::arg("spec"), py::arg("L"), py::arg("N"), py::arg("seed") = 20240901,
      "smallest nonzero eigenvalue of minus the generator");

  m.def(
      "lsi_constant",
      [](const std::string& spec, int sites, int particles, std::uint64_t seed,
         int restarts) {
        RateFunction rate = make_rate(spec, table_len(particles));
        Sector sec(Box::segment(sites), particles);
        DiscreteMeasure nu = canonical_measure(sec, rate);
        SparseGenerator gen = assemble_generator(sec, rate);
        LsiOptions o;
        o.seed = seed;
        o.restarts = restarts;
        LsiResult res = lsi_constant(edge_form(gen, nu), nu, o);
        py::dict d;
        d["estimate"] = res.estimate;
        d["certified_lower"] = res.certified_lower;
        d["degenerate"] = res.degenerate;
        return d;
      },
      py::arg("spec"), py::arg("L"), py::arg("N"), py::arg("seed") = 20240901,
      py::arg("restarts") = 32,
      "inverse of the optimized entropy-to-energy ratio");

  m.def(
      "gamma_pmf",
      [](const std::string& spec, int sites1, int sites2, int total) {
        DiscreteMeasure g = gamma_distribution(
            sites1, sites2, total, make_rate(spec, table_len(total)));
        return g.probs();
      },
      py::arg("spec"), py::arg("L1"), py::arg("L2"), py::arg("N"),
      "law of the particle count in the first block");

  m.def(
      "count_law",
      [](const std::string& spec, double alpha, int volume) {
        SiteLaw site = grand_canonical_site_law(make_rate(spec, 256), alpha);
        CountLaw law = total_count_law(site, volume);
        std::vector<double> pmf;
        pmf.reserve(law.size());
        for (std::size_t i = 0; i < law.size(); ++i) pmf.push_back(law.prob(i));
        py::dict d;
        d["pmf"] = pmf;
        d["mean"] = law.mean();
        d["variance"] = law.variance();
        d["tail_bound"] = law.tail_bound;
        return d;
      },
      py::arg("spec"), py::arg("alpha"), py::arg("volume"),
      "law of the total particle count over a box under the product law");

  m.def(
      "equivalence_gap",
      [](const std::string& spec, int volume, int particles) {
        return equivalence_gap(make_rate(spec, std::max(256, 4 * particles)),
                               volume, particles);
      },
      py::arg("spec"), py::arg("volume"), py::arg("particles"),
      "|canonical mean rate - fugacity| at matched density");

  m.def(
      "simulate",
      [](const std::string& spec, int sites, int particles, double horizon,
         std::uint64_t seed, int wavenumber) {
        RateFunction rate = make_rate(spec, table_len(particles));
        std::vector<int> eta(static_cast<std::size_t>(sites), 0);
        for (int p = 0; p < particles; ++p)
          ++eta[static_cast<std::size_t>(p % sites)];
        KmcOptions o;
        o.horizon = horizon;
        o.seed = seed;
        o.wavenumber = wavenumber;
        KmcSummary run = kmc_run(Box::segment(sites), rate, eta, o);
        std::vector<double> times, modes;
        for (const auto& s : run.samples) {
          times.push_back(s.time);
          modes.push_back(s.slow_mode);
        }
        py::dict d;
        d["times"] = times;
        d["slow_mode"] = modes;
        d["events"] = run.events;
        d["final_time"] = run.final_time;
        d["final_occupancy"] = run.final_occupancy;
        d["max_rate_drift"] = run.max_rate_drift;
        d["truncated"] = run.truncated;
        return d;
      },
      py::arg("spec"), py::arg("L"), py::arg("N"), py::arg("horizon"),
      py::arg("seed") = 1, py::arg("wavenumber") = 1,
      "kinetic Monte Carlo trajectory of the slow mode");

  m.def(
      "relaxation_time",
      [](const std::string& spec, int sites, int particles, double horizon,
         std::uint64_t seed, int replicas, int wavenumber) {
        RateFunction rate = make_rate(spec, table_len(particles));
        RelaxationResult res =
            relaxation_estimate(Box::segment(sites), rate, particles,
                                wavenumber, horizon, seed, replicas);
        py::dict d;
        d["tau"] = res.tau;
        d["ci_low"] = res.ci_low;
        d["ci_high"] = res.ci_high;
        d["unconverged"] = res.unconverged;
        d["gap_reference"] = res.gap_reference;
        return d;
      },
      py::arg("spec"), py::arg("L"), py::arg("N"), py::arg("horizon"),
      py::arg("seed") = 1, py::arg("replicas") = 8, py::arg("wavenumber") = 1,
      "integrated autocorrelation time of the slow mode");

  m.attr("__version__") = "0.1.0";
}
