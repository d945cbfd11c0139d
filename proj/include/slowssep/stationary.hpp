#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowssep/paths.hpp"

namespace slowssep {

enum class StationarySolver {
  /// Iterative aggregation-disaggregation over the mass sectors: the exact
  /// birth-death chain of the particle count, then a block Gauss-Seidel sweep
  /// with conjugate-gradient solves inside each sector.
  Aggregation,
  Direct,          ///< sparse LU on the balance equations plus normalization (small N)
  PowerIteration,  ///< power iteration on the uniformized kernel (small N)
};

struct StationaryDistribution {
  int N = 0;
  double alpha = 0, beta = 0;
  /// Exact mode: probability of each configuration; bit x-1 of the index is site x.
  VectorXd probabilities;
  /// Law of the particle count k = 0..N-1 (mass k/N).
  VectorXd mass_pmf;
  double residual = 0;  ///< ||mu Q||_inf, Q the diffusive generator
  std::string method;
  int iterations = 0;  ///< sweeps (aggregation) or steps (power iteration)

  /// P(eta(x) = 1) for x = 1..N-1 (exact mode only).
  VectorXd site_means() const;
};

/// Stationary law of the generator N^2 L_bulk + L_boundary on all 2^{N-1}
/// configurations (the accelerated generator is N times this one, so the law is
/// shared). Requires N - 1 <= 20.
StationaryDistribution exact_stationary(int N, double alpha, double beta,
                                        StationarySolver solver = StationarySolver::Aggregation,
                                        int max_iterations = 2'000'000);

struct StaticRateFit {
  double m = 0;
  std::vector<int> N;
  std::vector<double> rates;  ///< -(1/N) log mu_N(|mass - m| <= 1/(2N))
  double extrapolated = 0;    ///< intercept of rate_N = r + c/N (least squares)
  double reference = 0;       ///< S(m, gamma)
};

/// Finite-N static rates from a family of stationary laws (at least three N).
StaticRateFit static_rate_estimate(const std::vector<StationaryDistribution>& dists, double m);

}  // namespace slowssep
