#include "slowssep/experiments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "slowssep/error.hpp"
#include "slowssep/observables.hpp"
#include "slowssep/parallel.hpp"
#include "slowssep/ratefunc.hpp"

namespace slowssep {

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  require(trials > 0, "wilson_interval: need at least one trial");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<double> time_grid(double horizon, double step) {
  require(horizon > 0 && step > 0, "time_grid: horizon and step must be positive");
  std::vector<double> t;
  const auto n = static_cast<long>(std::floor(horizon / step + 1e-9));
  for (long k = 0; k <= n; ++k) t.push_back(std::min(horizon, static_cast<double>(k) * step));
  if (horizon - t.back() > 1e-12) t.push_back(horizon);
  return t;
}

HydroMassResult hydro_mass_experiment(const HydroMassSpec& spec) {
  EnsembleRequest rq;
  rq.params = spec.params;
  rq.initial = spec.initial;
  rq.observe_times = spec.times.empty() ? time_grid(spec.params.horizon, spec.params.horizon / 30) : spec.times;
  rq.replicas = spec.replicas;
  rq.kernel = spec.kernel;
  const EnsembleResult ens = sample_ensemble(rq);

  HydroMassResult r;
  r.kernel = ens.kernel;
  r.times = Eigen::Map<const VectorXd>(rq.observe_times.data(), static_cast<Eigen::Index>(rq.observe_times.size()));
  r.mean = ens.mass.colwise().mean().transpose();
  const double n = static_cast<double>(spec.replicas);
  r.std_error = VectorXd::Zero(r.times.size());
  if (spec.replicas > 1)
    for (Eigen::Index k = 0; k < r.times.size(); ++k)
      r.std_error(k) = std::sqrt((ens.mass.col(k).array() - r.mean(k)).square().sum() / (n - 1) / n);
  r.initial_mass = ens.initial_mass.mean();
  const double gamma = spec.params.gamma();
  if (spec.params.tilted())
    r.reference = tilted_mass_ode(r.initial_mass, gamma, *spec.params.tilt, r.times).values;
  else
    r.reference = mass_ode(r.initial_mass, gamma, r.times).values;
  r.sup_discrepancy = (r.mean - r.reference).cwiseAbs().maxCoeff();
  return r;
}

HydroProfileResult hydro_profile_experiment(const HydroProfileSpec& spec) {
  spec.params.validate();
  require(static_cast<bool>(spec.rho0), "hydro_profile: initial profile missing");
  require(spec.replicas >= 1, "hydro_profile: need at least one replica");
  const int N = spec.params.N;
  const int sites = N - 1;
  require(spec.cells >= 1 && spec.cells <= sites, "hydro_profile: need 1 <= cells <= N-1");
  const std::vector<double> times =
      spec.times.empty() ? time_grid(spec.params.horizon, spec.params.horizon / 10) : spec.times;
  const auto K = static_cast<Eigen::Index>(times.size());

  std::vector<Eigen::MatrixXd> per(spec.replicas, Eigen::MatrixXd::Zero(K, spec.cells));
  VectorXd edges;
  parallel_for(spec.replicas, [&](std::size_t r) {
    Xoshiro256 init(substream(spec.params.seed, 0x2001, r));
    Configuration c0(N);
    for (int x = 1; x <= sites; ++x) {
      const double p = spec.rho0(x / static_cast<double>(N));
      require(p >= 0 && p <= 1, "hydro_profile: initial profile must lie in [0,1]");
      c0.set(x, init.uniform() < p);
    }
    SimParams pr = spec.params;
    pr.seed = substream(spec.params.seed, 0x2002, r);
    SimulationOptions opt;
    opt.observe_times = times;
    Eigen::Index k = 0;
    opt.observer = [&](double, const Configuration& c) {
      per[r].row(k++) = block_density(EmpiricalMeasure(c), spec.cells).values.transpose();
    };
    simulate(pr, c0, opt);
  });

  HydroProfileResult out;
  out.times = Eigen::Map<const VectorXd>(times.data(), K);
  out.edges = block_density(EmpiricalMeasure(Configuration(N)), spec.cells).edges;
  out.mean = Eigen::MatrixXd::Zero(K, spec.cells);
  for (const auto& m : per) out.mean += m;
  out.mean /= static_cast<double>(spec.replicas);

  // Reference: heat equation on the site mesh (one cell per site), then block means.
  DensityProfile fine;
  fine.edges = VectorXd::LinSpaced(sites + 1, 0.0, 1.0);
  fine.values.resize(sites);
  for (int x = 1; x <= sites; ++x) fine.values(x - 1) = spec.rho0(x / static_cast<double>(N));
  const double T = times.back();
  const double N2 = static_cast<double>(N) * N;
  // Heat-equation time t corresponds to simulation time t for the diffusive scale.
  const double scale = spec.params.time_scale == TimeScale::Diffusive ? 1.0 : spec.params.bulk_rate() / N2;
  VectorXd pde_times = out.times * scale;
  HeatOptions ho;
  ho.dt = std::min(1e-4, std::max(1e-7, T * scale / 1000));
  const PdeSolution pde = heat_neumann(fine, pde_times, ho);
  out.reference = Eigen::MatrixXd::Zero(K, spec.cells);
  const int base = sites / spec.cells, extra = sites % spec.cells;
  int first = 0;
  for (int j = 0; j < spec.cells; ++j) {
    const int len = base + (j < extra ? 1 : 0);
    out.reference.col(j) = pde.values.middleCols(first, len).rowwise().mean();
    first += len;
  }
  out.sup_discrepancy = (out.mean - out.reference).cwiseAbs().maxCoeff();
  return out;
}

StationaryMCResult stationary_mc_experiment(const StationaryMCSpec& spec) {
  require(spec.burn_in >= 0 && spec.burn_in < spec.params.horizon, "stationary_mc: burn-in must lie in [0,T)");
  EnsembleRequest rq;
  rq.params = spec.params;
  rq.params.tilt.reset();
  rq.initial = {InitialKind::FixedMass, spec.params.gamma()};
  for (double t = spec.burn_in; t <= spec.params.horizon + 1e-12; t += spec.sample_step)
    rq.observe_times.push_back(std::min(t, spec.params.horizon));
  rq.replicas = spec.replicas;
  rq.kernel = spec.kernel;
  const EnsembleResult ens = sample_ensemble(rq);

  const int N = spec.params.N;
  StationaryMCResult r;
  r.mass_pmf = VectorXd::Zero(N);
  for (Eigen::Index i = 0; i < ens.mass.rows(); ++i)
    for (Eigen::Index k = 0; k < ens.mass.cols(); ++k) {
      const auto count = static_cast<Eigen::Index>(std::lround(ens.mass(i, k) * N));
      r.mass_pmf(count) += 1;
    }
  r.samples = static_cast<std::size_t>(ens.mass.size());
  r.mass_pmf /= static_cast<double>(r.samples);
  r.mean_mass = ens.mass.mean();
  if (N - 1 <= 16) {
    const auto exact = exact_stationary(N, spec.params.alpha, spec.params.beta);
    r.exact_pmf = exact.mass_pmf;
    r.total_variation = 0.5 * (r.mass_pmf - exact.mass_pmf).cwiseAbs().sum();
  }
  return r;
}

WeightSummary summarize_weights(const VectorXd& log_weight) {
  WeightSummary s;
  const auto n = static_cast<double>(log_weight.size());
  require(n >= 1, "summarize_weights: empty sample");
  const VectorXd w = log_weight.array().exp().matrix();
  s.mean = w.mean();
  s.std_error = n > 1 ? std::sqrt((w.array() - s.mean).square().sum() / (n - 1) / n) : 0;
  const double sq = w.squaredNorm();
  s.effective_sample_size = sq > 0 ? w.sum() * w.sum() / sq : 0;
  return s;
}

namespace {

EnsembleRequest rare_request(const RareEventSpec& spec, bool tilted) {
  EnsembleRequest rq;
  rq.params = spec.params;
  if (!tilted) rq.params.tilt.reset();
  const double m0 = spec.m0 < 0 ? spec.params.gamma() : spec.m0;
  require(m0 >= 0 && m0 <= 1, "rare event: initial mass must lie in [0,1]");
  require(spec.threshold >= 0 && spec.threshold <= 1, "rare event: threshold must lie in [0,1]");
  rq.initial = {InitialKind::FixedMass, m0};
  rq.observe_times = {spec.params.horizon};
  rq.replicas = spec.replicas;
  rq.kernel = spec.kernel;
  return rq;
}

bool hit(const EnsembleResult& ens, Eigen::Index i, const RareEventSpec& spec) {
  // Masses are multiples of 1/N; compare with a tolerance below 1/(2N).
  const double tol = 1e-9;
  const double v = spec.sup_mode ? ens.max_mass(i) : ens.mass(i, 0);
  return v >= spec.threshold - tol;
}

void fill_references(RareEventResult& r, const RareEventSpec& spec) {
  const double gamma = spec.params.gamma();
  r.reference_S = entropy_S(spec.threshold, gamma);
  r.reference_V = quasi_potential_V(spec.threshold, gamma, PotentialMode::NumericInf).value;
  const double N = spec.params.N;
  const double expected_hits = static_cast<double>(spec.replicas) * std::exp(-N * r.reference_S);
  if (expected_hits < 10) {
    std::ostringstream os;
    os << "planner: about " << expected_hits << " expected hits (replicas * exp(-N S(m*))); raise replicas or use rare-is";
    r.warnings.push_back(os.str());
  }
}

void fill_rates(RareEventResult& r, double N) {
  auto rate_of = [&](double p) { return p > 0 ? -std::log(p) / N : std::numeric_limits<double>::infinity(); };
  r.rate = rate_of(r.probability);
  r.rate_lo = rate_of(r.ci_hi);
  r.rate_hi = rate_of(r.ci_lo);
}

}  // namespace

RareEventResult rare_event_naive(const RareEventSpec& spec) {
  const EnsembleRequest rq = rare_request(spec, false);
  RareEventResult r;
  fill_references(r, spec);
  const EnsembleResult ens = sample_ensemble(rq);
  r.kernel = ens.kernel;
  r.replicas = spec.replicas;
  for (Eigen::Index i = 0; i < ens.mass.rows(); ++i) r.hits += hit(ens, i, spec);
  const double n = static_cast<double>(spec.replicas);
  if (r.hits == 0) {
    // One-sided 95% bound: (1 - p)^n = 0.05.
    r.one_sided = true;
    r.probability = 0;
    r.ci_lo = 0;
    r.ci_hi = 1 - std::pow(0.05, 1 / n);
    r.warnings.push_back("zero hits: only a one-sided upper bound is reported");
  } else {
    const Interval ci = wilson_interval(r.hits, spec.replicas);
    r.probability = ci.estimate;
    r.ci_lo = ci.lo;
    r.ci_hi = ci.hi;
  }
  r.effective_sample_size = static_cast<double>(r.hits);
  fill_rates(r, spec.params.N);
  return r;
}

RareEventResult rare_event_is(const RareEventSpec& spec) {
  require(spec.params.tilt.has_value(), "rare_event_is: a control G is required");
  EnsembleRequest rq = rare_request(spec, true);
  // The ring-process weights of the stirring kernels are unbiased but far
  // noisier than the path weight of the next-event kernel, so Auto picks the latter.
  if (rq.kernel == EnsembleKernel::Auto && rq.params.tilted()) rq.kernel = EnsembleKernel::NextEvent;
  RareEventResult r;
  fill_references(r, spec);

  // Pre-check: the control should carry the tilted mass ODE into the target.
  const double m0 = static_cast<double>(std::lround(rq.initial.value * spec.params.N)) / spec.params.N;
  const VectorXd grid = VectorXd::LinSpaced(401, 0.0, spec.params.horizon);
  const VectorXd ode = tilted_mass_ode(m0, spec.params.gamma(), *spec.params.tilt, grid).values;
  r.ode_endpoint = spec.sup_mode ? ode.maxCoeff() : ode(ode.size() - 1);
  if (r.ode_endpoint < spec.threshold - 1e-9) {
    std::ostringstream os;
    os << "control does not drive the tilted mass ODE into the target (reaches " << r.ode_endpoint << ")";
    r.warnings.push_back(os.str());
  }

  const EnsembleResult ens = sample_ensemble(rq);
  r.kernel = ens.kernel;
  r.replicas = spec.replicas;
  const auto n = static_cast<Eigen::Index>(spec.replicas);
  VectorXd y = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (hit(ens, i, spec)) {
      ++r.hits;
      y(i) = std::exp(ens.log_weight(i));
    }
  const double nn = static_cast<double>(n);
  const double mean = y.mean();
  const double var = n > 1 ? (y.array() - mean).square().sum() / (nn - 1) : 0;
  const double se = std::sqrt(var / nn);
  r.probability = mean;
  r.ci_lo = std::max(0.0, mean - 1.96 * se);
  r.ci_hi = mean + 1.96 * se;
  const double sq = y.squaredNorm();
  r.effective_sample_size = sq > 0 ? y.sum() * y.sum() / sq : 0;
  r.variance_ratio = var > 0 ? mean * (1 - mean) / var : std::numeric_limits<double>::infinity();
  if (r.hits == 0) {
    r.one_sided = true;
    r.warnings.push_back("zero weighted hits: estimate is 0 and the interval is degenerate");
  }
  if (r.effective_sample_size < 10)
    r.warnings.push_back("degenerate weights: effective sample size below 10");
  fill_rates(r, spec.params.N);
  return r;
}

ControlPath anti_relaxation_control(double m, double gamma, double horizon, Eigen::Index intervals) {
  require(m > 0 && m < 1, "anti_relaxation_control: m must lie in (0,1)");
  const VectorXd grid = uniform_grid(horizon, intervals);
  return ControlPath::sample(
      [&](double t) {
        const double a = gamma + (m - gamma) * std::exp(-2 * (horizon - t));
        return std::log((1 - gamma) * a / (gamma * (1 - a)));
      },
      grid);
}

ControlPath bridge_control(double m, double gamma, double horizon, Eigen::Index intervals) {
  const VectorXd grid = uniform_grid(horizon, intervals);
  const double s = std::sinh(2 * horizon);
  const MassPath a = MassPath::sample([&](double t) { return gamma + (m - gamma) * std::sinh(2 * t) / s; },
                                      [&](double t) { return 2 * (m - gamma) * std::cosh(2 * t) / s; }, grid);
  return closed_form_H(a, gamma);
}

}  // namespace slowssep
