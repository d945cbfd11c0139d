#include "slowssep/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "slowssep/error.hpp"
#include "slowssep/experiments.hpp"
#include "slowssep/ratefunc.hpp"
#include "slowssep/report.hpp"

namespace slowssep {

namespace {

class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"hydro-mass", "replica mean of the total mass against m(t) = g + (m0 - g) e^{-2t}"},
      {"hydro-profile", "block densities against the Neumann heat equation"},
      {"tilted-hydro", "mass under a constant boundary tilt against the tilted mass ODE"},
      {"stationary-exact", "exact stationary law for small N and the static rate at --m"},
      {"stationary-mc", "stationary mass histogram from long runs"},
      {"rare-naive", "P[mass_T >= threshold] by direct sampling"},
      {"rare-is", "P[mass_T >= threshold] by tilted sampling and reweighting"},
      {"rate-table", "S(m) and the numeric quasi-potential on an m grid"},
      {"quasi-potential", "V(m) by minimizing the two-segment path cost over T1"},
      {"pde-decay", "decay rate of the Neumann heat equation under refinement"},
  };
  return d;
}

bool is_simulation(const std::string& e) {
  return e == "hydro-mass" || e == "hydro-profile" || e == "tilted-hydro" || e == "stationary-mc" ||
         e == "rare-naive" || e == "rare-is";
}

void add_options(CLI::App& app, RunConfig& c) {
  const std::string& e = c.experiment;
  const auto kernels = CLI::IsMember({"auto", "next-event", "stirring", "bitsliced"});
  if (is_simulation(e) || e == "stationary-exact") {
    app.add_option("--N", c.N, "lattice parameter (N-1 sites)");
    app.add_option("--alpha", c.alpha, "left reservoir density, in (0,1)");
    app.add_option("--beta", c.beta, "right reservoir density, in (0,1)");
  }
  if (is_simulation(e)) {
    app.add_option("--time-scale", c.time_scale, "diffusive (N^2 / 1) or accelerated (N^3 / N)")
        ->check(CLI::IsMember({"diffusive", "accelerated"}));
    app.add_option("--T", c.T, "time horizon");
    app.add_option("--replicas", c.replicas, "number of independent replicas");
    app.add_option("--seed", c.seed, "base seed");
    if (e != "hydro-profile") app.add_option("--kernel", c.kernel, "replica sampler")->check(kernels);
  }
  if (e == "hydro-mass" || e == "tilted-hydro" || e == "hydro-profile")
    app.add_option("--grid-step", c.grid_step, "observation spacing");
  if (e == "hydro-mass" || e == "tilted-hydro") {
    app.add_option("--initial", c.initial, "initial data")->check(CLI::IsMember({"empty", "full", "product", "fixed"}));
    app.add_option("--initial-mass", c.initial_mass, "density (product) or mass (fixed)");
  }
  if (e == "tilted-hydro") app.add_option("--tilt", c.tilt, "constant control G");
  if (e == "hydro-profile") {
    app.add_option("--cells", c.cells, "number of blocks");
    app.add_option("--profile", c.profile, "initial profile")->check(CLI::IsMember({"step", "cosine"}));
  }
  if (e == "stationary-exact") {
    app.add_option("--solver", c.solver, "aggregation, direct (sparse LU) or power")
        ->check(CLI::IsMember({"aggregation", "direct", "power"}));
    app.add_option("--m", c.m, "mass for the static rate");
  }
  if (e == "stationary-mc") {
    app.add_option("--burn-in", c.burn_in, "time discarded before sampling");
    app.add_option("--sample-step", c.sample_step, "spacing of samples after burn-in");
  }
  if (e == "rare-naive" || e == "rare-is") {
    app.add_option("--threshold", c.threshold, "event mass_T >= threshold");
    app.add_option("--m0", c.m0, "initial mass (default gamma)");
    app.add_flag("--sup-mode", c.sup_mode, "use sup_t mass_t instead of mass_T");
  }
  if (e == "rare-is") {
    app.add_option("--control", c.control, "tilt used for sampling")
        ->check(CLI::IsMember({"constant", "anti-relaxation", "bridge"}));
    app.add_option("--tilt", c.tilt, "value of the constant control");
  }
  if (e == "rate-table" || e == "quasi-potential") {
    app.add_option("--gamma", c.gamma, "gamma in (0,1); default (alpha+beta)/2");
    app.add_option("--alpha", c.alpha, "left reservoir density, in (0,1)");
    app.add_option("--beta", c.beta, "right reservoir density, in (0,1)");
  }
  if (e == "rate-table") app.add_option("--m-grid", c.m_grid, "first:last:step");
  if (e == "quasi-potential") app.add_option("--m", c.m, "target mass");
  if (e == "pde-decay") {
    app.add_option("--cells", c.cells, "cells on the coarsest mesh");
    app.add_option("--T", c.T, "time horizon");
    app.add_option("--dt", c.dt, "time step on the coarsest mesh");
    app.add_option("--refine", c.refine, "number of meshes (each halves h and dt)");
    app.add_option("--mode", c.mode, "initial profile")->check(CLI::IsMember({"cosine", "two-mode"}));
  }
  app.add_option("--out-dir", c.out_dir, "directory for report files");
  app.add_option("--format", c.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
}

void set_experiment_defaults(RunConfig& c) {
  if (c.experiment == "hydro-profile") {
    c.time_scale = "diffusive";
    c.T = 0.1;
    c.grid_step = 0.01;
    c.replicas = 50;
  }
  if (c.experiment == "stationary-exact") c.N = 10;
  if (c.experiment == "pde-decay") {
    c.cells = 50;
    c.T = 0.5;
    c.dt = 4e-4;
  }
}

std::vector<double> parse_m_grid(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("m-grid: '" + s + "' is not first:last:step");
    }
  }
  if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0])
    throw ConfigError("m-grid: '" + s + "' is not first:last:step with step > 0");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= n; ++k) g.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  for (double m : g)
    if (m < 0 || m > 1) throw ConfigError("m-grid: values must lie in [0,1]");
  return g;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  auto open01 = [&](const char* name, double v) {
    if (!(v > 0 && v < 1)) fail(std::string(name) + " = " + format_number(v) + " violates 0 < " + name + " < 1");
  };
  open01("alpha", c.alpha);
  open01("beta", c.beta);
  if (c.gamma) open01("gamma", *c.gamma);
  if (c.N < 3) fail("N = " + std::to_string(c.N) + " violates N >= 3");
  if (!(c.T > 0)) fail("T must be positive");
  if (c.replicas < 1) fail("replicas must be at least 1");
  if (!(c.grid_step > 0)) fail("grid-step must be positive");
  if (!(c.initial_mass >= 0 && c.initial_mass <= 1)) fail("initial-mass must lie in [0,1]");
  if (!(c.threshold >= 0 && c.threshold <= 1)) fail("threshold must lie in [0,1]");
  if (c.m0 > 1) fail("m0 must lie in [0,1] (or be negative for gamma)");
  if (!(c.m >= 0 && c.m <= 1)) fail("m must lie in [0,1]");
  if (c.cells < 1) fail("cells must be at least 1");
  if (!(c.dt > 0)) fail("dt must be positive");
  if (c.refine < 1) fail("refine must be at least 1");
  if (!(c.sample_step > 0)) fail("sample-step must be positive");
  if (!std::isfinite(c.tilt)) fail("tilt must be finite");
  if (c.experiment == "stationary-mc" && !(c.burn_in >= 0 && c.burn_in < c.T)) fail("burn-in must lie in [0,T)");
  if (c.experiment == "hydro-profile" && c.cells > c.N - 1) fail("cells must not exceed N-1");
  if (c.experiment == "rate-table") parse_m_grid(c.m_grid);
}

// Flat "key = value" file; '#' starts a comment; quotes around values are dropped.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    for (char& ch : key)
      if (ch == '_') ch = '-';
    kv.emplace_back(key, value);
  }
  return kv;
}

TimeScale parse_time_scale(const std::string& s) { return s == "diffusive" ? TimeScale::Diffusive : TimeScale::Accelerated; }

EnsembleKernel parse_kernel(const std::string& s) {
  if (s == "next-event") return EnsembleKernel::NextEvent;
  if (s == "stirring") return EnsembleKernel::Stirring;
  if (s == "bitsliced") return EnsembleKernel::Bitsliced;
  return EnsembleKernel::Auto;
}

SimParams sim_params(const RunConfig& c) {
  SimParams p;
  p.N = c.N;
  p.alpha = c.alpha;
  p.beta = c.beta;
  p.time_scale = parse_time_scale(c.time_scale);
  p.horizon = c.T;
  p.seed = c.seed;
  return p;
}

InitialCondition initial_condition(const RunConfig& c) {
  if (c.initial == "empty") return {InitialKind::Empty, 0};
  if (c.initial == "full") return {InitialKind::Full, 1};
  if (c.initial == "product") return {InitialKind::Product, c.initial_mass};
  return {InitialKind::FixedMass, c.initial_mass};
}

CsvRow row(const RunConfig& c, const std::string& label, double x, double est, double lo, double hi, double ref) {
  return {label, c.N, x, est, lo, hi, ref, c.seed};
}

Report run_hydro_mass(const RunConfig& c, bool tilted) {
  HydroMassSpec s;
  s.params = sim_params(c);
  if (tilted) s.params.tilt = ControlPath::constant(c.tilt, c.T);
  s.initial = initial_condition(c);
  s.times = time_grid(c.T, c.grid_step);
  s.replicas = c.replicas;
  s.kernel = parse_kernel(c.kernel);
  const HydroMassResult r = hydro_mass_experiment(s);
  Report rep;
  for (Eigen::Index k = 0; k < r.times.size(); ++k)
    rep.rows.push_back(row(c, c.experiment, r.times(k), r.mean(k), r.mean(k) - 1.96 * r.std_error(k),
                           r.mean(k) + 1.96 * r.std_error(k), r.reference(k)));
  rep.summary = {{"sup_discrepancy", r.sup_discrepancy},
                 {"initial_mass", r.initial_mass},
                 {"gamma", c.effective_gamma()},
                 {"kernel", to_string(r.kernel)}};
  return rep;
}

Report run_hydro_profile(const RunConfig& c) {
  HydroProfileSpec s;
  s.params = sim_params(c);
  s.cells = c.cells;
  s.replicas = c.replicas;
  s.times = time_grid(c.T, c.grid_step);
  if (c.profile == "step")
    s.rho0 = [](double x) { return x < 0.5 ? 1.0 : 0.0; };
  else
    s.rho0 = [](double x) { return 0.5 + 0.5 * std::cos(std::numbers::pi * x); };
  const HydroProfileResult r = hydro_profile_experiment(s);
  Report rep;
  for (Eigen::Index k = 0; k < r.times.size(); ++k)
    for (Eigen::Index j = 0; j < r.mean.cols(); ++j) {
      const double centre = (r.edges(j) + r.edges(j + 1)) / 2;
      rep.rows.push_back(row(c, "hydro-profile[t=" + format_number(r.times(k)) + "]", centre, r.mean(k, j),
                             r.mean(k, j), r.mean(k, j), r.reference(k, j)));
    }
  rep.summary = {{"sup_discrepancy", r.sup_discrepancy}};
  return rep;
}

Report run_stationary_exact(const RunConfig& c) {
  const auto d = exact_stationary(c.N, c.alpha, c.beta,
                                  c.solver == "power"    ? StationarySolver::PowerIteration
                                  : c.solver == "direct" ? StationarySolver::Direct
                                                         : StationarySolver::Aggregation);
  const double g = c.effective_gamma();
  Report rep;
  for (int k = 0; k < c.N; ++k) {
    // Product-measure reference Binomial(N-1, gamma); exact when alpha = beta.
    const double ref = std::exp(std::lgamma(c.N) - std::lgamma(k + 1) - std::lgamma(c.N - k) + k * std::log(g) +
                                (c.N - 1 - k) * std::log1p(-g));
    rep.rows.push_back(row(c, c.experiment, k / static_cast<double>(c.N), d.mass_pmf(k), d.mass_pmf(k), d.mass_pmf(k), ref));
  }
  const VectorXd means = d.site_means();
  double window = 0;
  for (int k = 0; k < c.N; ++k)
    if (std::abs(k / static_cast<double>(c.N) - c.m) <= 0.5 / c.N + 1e-12) window += d.mass_pmf(k);
  rep.summary = {{"residual", d.residual},
                 {"method", d.method},
                 {"iterations", d.iterations},
                 {"site_means", std::vector<double>(means.data(), means.data() + means.size())},
                 {"m", c.m},
                 {"static_rate", json_number(window > 0 ? -std::log(window) / c.N : INFINITY)},
                 {"entropy_S", entropy_S(c.m, g)}};
  return rep;
}

Report run_stationary_mc(const RunConfig& c) {
  StationaryMCSpec s;
  s.params = sim_params(c);
  s.burn_in = c.burn_in;
  s.sample_step = c.sample_step;
  s.replicas = c.replicas;
  s.kernel = parse_kernel(c.kernel);
  const StationaryMCResult r = stationary_mc_experiment(s);
  Report rep;
  for (int k = 0; k < c.N; ++k) {
    const auto hits = static_cast<std::size_t>(std::llround(r.mass_pmf(k) * static_cast<double>(r.samples)));
    const Interval ci = wilson_interval(hits, r.samples);
    rep.rows.push_back(row(c, c.experiment, k / static_cast<double>(c.N), r.mass_pmf(k), ci.lo, ci.hi,
                           r.exact_pmf ? (*r.exact_pmf)(k) : std::nan("")));
  }
  rep.summary = {{"samples", r.samples}, {"mean_mass", r.mean_mass}, {"gamma", c.effective_gamma()}};
  if (r.exact_pmf) rep.summary["total_variation"] = r.total_variation;
  rep.warnings.push_back("samples along one replica are correlated; the per-bin intervals treat them as independent");
  return rep;
}

Report run_rare(const RunConfig& c, bool is) {
  RareEventSpec s;
  s.params = sim_params(c);
  s.m0 = c.m0;
  s.threshold = c.threshold;
  s.replicas = c.replicas;
  s.sup_mode = c.sup_mode;
  s.kernel = parse_kernel(c.kernel);
  const double g = c.effective_gamma();
  if (is) {
    if (c.control == "constant")
      s.params.tilt = ControlPath::constant(c.tilt, c.T);
    else if (c.control == "anti-relaxation")
      s.params.tilt = anti_relaxation_control(c.threshold, g, c.T);
    else
      s.params.tilt = bridge_control(c.threshold, g, c.T);
  }
  const RareEventResult r = is ? rare_event_is(s) : rare_event_naive(s);
  Report rep;
  rep.rows.push_back(row(c, c.experiment + ".probability", c.threshold, r.probability, r.ci_lo, r.ci_hi,
                         std::exp(-c.N * r.reference_V)));
  rep.rows.push_back(row(c, c.experiment + ".rate", c.threshold, r.rate, r.rate_lo, r.rate_hi, r.reference_V));
  rep.summary = {{"hits", r.hits},
                 {"replicas", r.replicas},
                 {"one_sided", r.one_sided},
                 {"reference_V", r.reference_V},
                 {"reference_S", r.reference_S},
                 {"kernel", to_string(r.kernel)},
                 {"effective_sample_size", r.effective_sample_size}};
  if (is) {
    rep.summary["variance_ratio"] = json_number(r.variance_ratio);
    rep.summary["ode_endpoint"] = r.ode_endpoint;
    rep.summary["control"] = c.control;
  }
  rep.warnings = r.warnings;
  return rep;
}

Report run_rate_table(const RunConfig& c) {
  const double g = c.effective_gamma();
  Report rep;
  for (double m : parse_m_grid(c.m_grid)) {
    const double S = entropy_S(m, g);
    const double V = quasi_potential_V(m, g, PotentialMode::NumericInf).value;
    rep.rows.push_back(row(c, c.experiment, m, V, V, V, S));
  }
  rep.summary = {{"gamma", g}};
  return rep;
}

Report run_quasi_potential(const RunConfig& c) {
  const double g = c.effective_gamma();
  const double S = entropy_S(c.m, g);
  Report rep;
  if (c.m > 0 && c.m < 1 && c.m != g)
    for (double t1 : {0.5, 1.0, 2.0, 4.0, 6.0})
      rep.rows.push_back(row(c, "quasi-potential.scan", t1, two_segment_cost(c.m, g, t1), NAN, NAN, S));
  const RateReport V = quasi_potential_V(c.m, g, PotentialMode::NumericInf);
  rep.rows.push_back(row(c, c.experiment, V.t1, V.value, V.value, V.value, S));
  rep.summary = {{"gamma", g}, {"m", c.m}, {"V", V.value}, {"S", S}, {"T1", V.t1}, {"evaluations", V.iterations}};
  if (c.m > 0 && c.m < 1) {
    const double aT1 = g + (c.m - g) * std::exp(-2 * V.t1);
    if (aT1 > 0 && aT1 < 1 && c.m != g) {
      rep.summary["appendix_cost"] = appendix_cost(c.m, aT1, g);
      rep.summary["corrected_appendix_cost"] = corrected_appendix_cost(c.m, aT1, g);
    }
  }
  return rep;
}

Report run_pde_decay(const RunConfig& c) {
  using std::numbers::pi;
  Report rep;
  auto rho0 = c.mode == "cosine" ? std::function<double(double)>([](double x) { return 0.5 + 0.5 * std::cos(pi * x); })
                                 : std::function<double(double)>([](double x) {
                                     return 0.5 + 0.25 * std::cos(pi * x) + 0.25 * std::cos(2 * pi * x);
                                   });
  const double fit_from = c.mode == "cosine" ? 0.0 : c.T / 2;
  nlohmann::json levels = nlohmann::json::array();
  for (int level = 0; level < c.refine; ++level) {
    const int cells = c.cells << level;
    const DensityProfile p0 = DensityProfile::sample(rho0, cells);
    HeatOptions ho;
    ho.dt = c.dt / std::pow(4.0, level);
    const VectorXd times = VectorXd::LinSpaced(101, 0.0, c.T);
    const PdeSolution sol = heat_neumann(p0, times, ho);
    const DecayFit fit = decay_check(sol, fit_from);
    double drift = 0;
    for (Eigen::Index k = 0; k < times.size(); ++k) drift = std::max(drift, std::abs(sol.mass(k) - sol.mass(0)));
    rep.rows.push_back(row(c, c.experiment, cells, fit.rate, fit.rate, fit.rate, 2 * pi * pi));
    levels.push_back({{"cells", cells}, {"dt", ho.dt}, {"rate", fit.rate}, {"residual", fit.residual}, {"mass_drift", drift}});
  }
  rep.summary = {{"levels", levels}, {"reference", 2 * pi * pi}};
  return rep;
}

}  // namespace

double RunConfig::effective_gamma() const { return gamma ? *gamma : (alpha + beta) / 2; }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"experiment", experiment},
                      {"N", N},
                      {"alpha", alpha},
                      {"beta", beta},
                      {"gamma", effective_gamma()},
                      {"time_scale", time_scale},
                      {"T", T},
                      {"replicas", replicas},
                      {"seed", seed},
                      {"kernel", kernel},
                      {"out_dir", out_dir},
                      {"format", format},
                      {"grid_step", grid_step},
                      {"initial", initial},
                      {"initial_mass", initial_mass},
                      {"cells", cells},
                      {"profile", profile},
                      {"tilt", tilt},
                      {"control", control},
                      {"threshold", threshold},
                      {"m0", m0},
                      {"sup_mode", sup_mode},
                      {"solver", solver},
                      {"m", m},
                      {"burn_in", burn_in},
                      {"sample_step", sample_step},
                      {"m_grid", m_grid},
                      {"dt", dt},
                      {"refine", refine},
                      {"mode", mode}};
  return j;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : descriptions()) v.push_back(k);
    return v;
  }();
  return names;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  std::vector<std::string> flags;
  std::optional<std::string> config_path;
  bool seen_flag = false;  // the experiment name must precede all flags
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else if (!seen_flag && c.experiment.empty() && !a.empty() && a[0] != '-') {
      c.experiment = a;
    } else {
      seen_flag = true;
      flags.push_back(a);
    }
  }
  std::vector<std::pair<std::string, std::string>> file_kv;
  if (config_path) {
    for (auto& [k, v] : read_config_file(*config_path)) {
      if (k == "experiment") {
        if (!c.experiment.empty() && c.experiment != v)
          throw ConfigError("config: experiment '" + v + "' conflicts with command '" + c.experiment + "'");
        c.experiment = v;
      } else {
        file_kv.emplace_back(k, v);
      }
    }
  }
  if (c.experiment.empty()) {
    std::ostringstream os;
    os << "usage: slowssep <experiment> [--config FILE] [--key value ...]\n\nexperiments:\n";
    for (const auto& [k, d] : descriptions()) os << "  " << k << std::string(18 - k.size(), ' ') << d << "\n";
    if (std::find(flags.begin(), flags.end(), "--help") != flags.end() ||
        std::find(flags.begin(), flags.end(), "-h") != flags.end())
      throw HelpRequested(os.str());
    throw ConfigError("no experiment given\n" + os.str());
  }
  if (!descriptions().count(c.experiment)) throw ConfigError("unknown experiment '" + c.experiment + "'");

  set_experiment_defaults(c);
  CLI::App app(descriptions().at(c.experiment), "slowssep " + c.experiment);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_options(app, c);

  std::vector<std::string> tokens;
  for (const auto& [k, v] : file_kv) {
    if (app.get_option_no_throw("--" + k) == nullptr)
      throw ConfigError("config: unknown key '" + k + "' for experiment " + c.experiment);
    tokens.push_back("--" + k + "=" + v);
  }
  tokens.insert(tokens.end(), flags.begin(), flags.end());
  std::reverse(tokens.begin(), tokens.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(tokens);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string(e.what()));
  }
  validate(c);
  return c;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Report rep;
  const std::string& e = c.experiment;
  if (e == "hydro-mass")
    rep = run_hydro_mass(c, false);
  else if (e == "tilted-hydro")
    rep = run_hydro_mass(c, true);
  else if (e == "hydro-profile")
    rep = run_hydro_profile(c);
  else if (e == "stationary-exact")
    rep = run_stationary_exact(c);
  else if (e == "stationary-mc")
    rep = run_stationary_mc(c);
  else if (e == "rare-naive")
    rep = run_rare(c, false);
  else if (e == "rare-is")
    rep = run_rare(c, true);
  else if (e == "rate-table")
    rep = run_rate_table(c);
  else if (e == "quasi-potential")
    rep = run_quasi_potential(c);
  else if (e == "pde-decay")
    rep = run_pde_decay(c);
  else
    throw ConfigError("unknown experiment '" + e + "'");
  rep.experiment = e;
  rep.config = c.to_json();
  write_report(rep, c.out_dir, c.format != "json", c.format != "csv");
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  out << e << ": " << rep.summary.dump() << "\n";
  out << "wrote " << (std::filesystem::path(c.out_dir) / e).string() << (c.format == "both" ? ".{csv,json}" : "." + c.format)
      << "\n";
  return 0;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig c;
  try {
    c = parse_config(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run(c, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << c.experiment << " failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace slowssep
