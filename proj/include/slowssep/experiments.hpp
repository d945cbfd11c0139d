#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowssep/ensemble.hpp"
#include "slowssep/macroscopic.hpp"
#include "slowssep/stationary.hpp"

namespace slowssep {

struct Interval {
  double estimate = 0, lo = 0, hi = 0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.96);

/// Observation grid 0, step, 2 step, ..., T (T always included).
std::vector<double> time_grid(double horizon, double step);

// ---------------------------------------------------------------------------
// Hydrodynamic mass (untilted: Eq. for m(t); tilted: tilted mass ODE).

struct HydroMassSpec {
  SimParams params;
  InitialCondition initial{InitialKind::Empty, 0.0};
  std::vector<double> times;
  std::size_t replicas = 100;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

struct HydroMassResult {
  VectorXd times, mean, std_error, reference;
  double sup_discrepancy = 0;
  double initial_mass = 0;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

/// Replica mean of the mass against mass_ode, or against tilted_mass_ode when
/// params carries a tilt. The reference starts from the realized initial mass.
HydroMassResult hydro_mass_experiment(const HydroMassSpec& spec);

// ---------------------------------------------------------------------------
// Hydrodynamic profile (diffusive scale, heat equation with Neumann data).

struct HydroProfileSpec {
  SimParams params;  ///< time_scale should be Diffusive
  std::function<double(double)> rho0;
  int cells = 8;
  std::vector<double> times;
  std::size_t replicas = 50;
};

struct HydroProfileResult {
  VectorXd times;
  VectorXd edges;
  Eigen::MatrixXd mean, reference;  ///< rows: times, columns: cells
  double sup_discrepancy = 0;
};

HydroProfileResult hydro_profile_experiment(const HydroProfileSpec& spec);

// ---------------------------------------------------------------------------
// Stationary mass law by simulation.

struct StationaryMCSpec {
  SimParams params;
  double burn_in = 1.0;
  double sample_step = 0.1;
  std::size_t replicas = 100;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

struct StationaryMCResult {
  VectorXd mass_pmf;  ///< normalized histogram over k = 0..N-1
  std::size_t samples = 0;
  std::optional<VectorXd> exact_pmf;  ///< when N - 1 <= 16
  double total_variation = 0;         ///< against exact_pmf when present
  double mean_mass = 0;
};

StationaryMCResult stationary_mc_experiment(const StationaryMCSpec& spec);

// ---------------------------------------------------------------------------
// Rare events: P[mass_T >= threshold] (or sup_t mass_t >= threshold).

struct RareEventSpec {
  SimParams params;         ///< tilt ignored by rare_event_naive
  double m0 = -1;           ///< initial mass; negative means gamma
  double threshold = 0.75;
  std::size_t replicas = 100000;
  bool sup_mode = false;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

struct RareEventResult {
  double probability = 0;
  double ci_lo = 0, ci_hi = 0;
  bool one_sided = false;  ///< zero hits: only the upper bound is informative
  std::size_t hits = 0, replicas = 0;
  double rate = 0, rate_lo = 0, rate_hi = 0;  ///< -(1/N) log p and its CI
  double reference_V = 0;                    ///< numeric quasi-potential of the threshold
  double reference_S = 0;
  std::vector<std::string> warnings;
  EnsembleKernel kernel = EnsembleKernel::Auto;
  // importance sampling only
  double effective_sample_size = 0;
  double variance_ratio = 0;  ///< naive Bernoulli variance / weighted-sample variance
  double ode_endpoint = 0;    ///< tilted mass ODE at T (or its max in sup mode)
};

RareEventResult rare_event_naive(const RareEventSpec& spec);

/// Tilted replicas reweighted by exp(log dP/dP^G); spec.params.tilt is the control.
/// With a nonzero control, Auto resolves to the next-event kernel (lowest weight
/// variance); with G = 0 it matches rare_event_naive replica for replica.
RareEventResult rare_event_is(const RareEventSpec& spec);

struct WeightSummary {
  double mean = 0, std_error = 0, effective_sample_size = 0;
};
WeightSummary summarize_weights(const VectorXd& log_weight);

/// Control G(t) = log((1-g) a(t) / (g (1-a(t)))) along the reversed relaxation
/// a(t) = g + (m - g) e^{-2(T - t)} that ends at m at time T.
ControlPath anti_relaxation_control(double m, double gamma, double horizon, Eigen::Index intervals = 600);

/// closed_form_H of the smooth bridge a(t) = g + (m - g) sinh(2t)/sinh(2T),
/// which leaves g at t = 0 and reaches m at T.
ControlPath bridge_control(double m, double gamma, double horizon, Eigen::Index intervals = 600);

}  // namespace slowssep
