#pragma once

#include <Eigen/Dense>

#include "slowssep/observables.hpp"
#include "slowssep/paths.hpp"

namespace slowssep {

enum class OdeMethod { ClosedForm, RK4 };

struct OdeSolution {
  VectorXd grid;
  VectorXd values;
  OdeMethod method = OdeMethod::RK4;
  int substeps = 1;          ///< RK4 steps per breakpoint interval at acceptance
  double refinement_gap = 0;  ///< sup-norm change at the last halving
};

/// m(t) = gamma + (m0 - gamma) e^{-2t}.
double mass_ode(double m0, double gamma, double t);
OdeSolution mass_ode(double m0, double gamma, const VectorXd& grid);

/// Right-hand side of the tilted mass equation.
inline double tilted_mass_rhs(double m, double gamma, double g) {
  return 2 * gamma * (1 - m) * std::exp(g) - 2 * (1 - gamma) * m * std::exp(-g);
}

/// RK4 for m' = 2 gamma (1-m) e^G - 2 (1-gamma) m e^{-G}, reported on `grid`.
/// Steps are aligned with the nodes of G and halved until two successive
/// solutions differ by less than `tol` in sup norm.
OdeSolution tilted_mass_ode(double m0, double gamma, const ControlPath& G, const VectorXd& grid, double tol = 1e-8);

struct PdeSolution {
  VectorXd times;
  VectorXd edges;          ///< cell mesh on [0,1]
  Eigen::MatrixXd values;  ///< rows: times, columns: cells

  VectorXd widths() const { return edges.tail(edges.size() - 1) - edges.head(edges.size() - 1); }
  double mass(Eigen::Index k) const { return values.row(k).dot(widths()); }
};

struct HeatOptions {
  double dt = 1e-4;  ///< backward Euler step (clipped to the output spacing)
};

/// Heat equation with homogeneous Neumann data on the cells of rho0:
/// cell-centred finite volumes (a reflecting ghost cell at each end) and
/// backward Euler in time. The discrete mass sum_j w_j rho_j is conserved.
PdeSolution heat_neumann(const DensityProfile& rho0, const VectorXd& times, const HeatOptions& options = {});

struct DecayFit {
  double rate = 0;       ///< minus the slope of log ||rho - mean||^2
  double intercept = 0;
  double residual = 0;   ///< rms residual of the log fit
  int points = 0;
};

/// Least-squares fit of log ||rho(t) - mean||_{L2}^2 against t over t >= fit_from.
DecayFit decay_check(const PdeSolution& sol, double fit_from = 0);

}  // namespace slowssep
