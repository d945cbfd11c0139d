#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slowssep/lattice.hpp"
#include "slowssep/random.hpp"

namespace slowssep {

enum class InitialKind { Empty, Full, Product, FixedMass };

/// Initial data for replica runs.
///   Product:   independent Bernoulli(value) sites.
///   FixedMass: round(value * N) particles at uniformly random sites.
struct InitialCondition {
  InitialKind kind = InitialKind::FixedMass;
  double value = 0.5;

  Configuration sample(int lattice_n, Xoshiro256& rng) const;
};

enum class EnsembleKernel {
  Auto,
  NextEvent,  ///< simulate() per replica
  Stirring,   ///< uniformized stirring, one replica at a time
  Bitsliced,  ///< uniformized stirring, 512 replicas per SIMD batch (N <= 66)
};

struct EnsembleRequest {
  SimParams params;  ///< params.seed is the base seed
  InitialCondition initial;
  std::vector<double> observe_times;  ///< sorted, within [0, T]
  std::size_t replicas = 1;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

struct EnsembleResult {
  Eigen::MatrixXd mass;      ///< replicas x observe_times
  Eigen::VectorXd max_mass;  ///< running maximum of the mass over [0, T]
  Eigen::VectorXd initial_mass;
  /// log dP/dP^G per replica; 0 without tilt. NextEvent uses the exponential
  /// martingale of the mass path; the stirring kernels use the likelihood ratio
  /// of their boundary ring process, which is an equally unbiased weight.
  Eigen::VectorXd log_weight;
  EnsembleKernel kernel = EnsembleKernel::Auto;
};

/// Independent replicas of the (optionally tilted) dynamics, observed through
/// the total mass. All kernels sample the same path law exactly; they differ in
/// cost only. Replica r draws from substream(seed, ., r).
EnsembleResult sample_ensemble(const EnsembleRequest& request);

/// Kernel that Auto resolves to for a request.
EnsembleKernel resolve_kernel(const EnsembleRequest& request);

const char* to_string(EnsembleKernel k);

}  // namespace slowssep
