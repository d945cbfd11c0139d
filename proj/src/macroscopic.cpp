#include "slowssep/macroscopic.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

#include "slowssep/error.hpp"

namespace slowssep {

namespace {

void check_ode_inputs(double m0, double gamma) {
  require(m0 >= 0 && m0 <= 1, "mass ode: m0 must lie in [0,1]");
  require(gamma > 0 && gamma < 1, "mass ode: gamma must lie in (0,1)");
}

void check_grid(const VectorXd& grid) {
  require(grid.size() >= 1, "grid must be non-empty");
  require(grid(0) >= 0, "grid times must be non-negative");
  for (Eigen::Index k = 1; k < grid.size(); ++k) require(grid(k) > grid(k - 1), "grid must be strictly increasing");
}

}  // namespace

double mass_ode(double m0, double gamma, double t) {
  check_ode_inputs(m0, gamma);
  require(t >= 0, "mass ode: t must be non-negative");
  return gamma + (m0 - gamma) * std::exp(-2 * t);
}

OdeSolution mass_ode(double m0, double gamma, const VectorXd& grid) {
  check_grid(grid);
  OdeSolution s;
  s.grid = grid;
  s.values = grid.unaryExpr([&](double t) { return mass_ode(m0, gamma, t); });
  s.method = OdeMethod::ClosedForm;
  return s;
}

OdeSolution tilted_mass_ode(double m0, double gamma, const ControlPath& G, const VectorXd& grid, double tol) {
  check_ode_inputs(m0, gamma);
  check_grid(grid);
  const double T = grid(grid.size() - 1);
  require(G.covers(T), "tilted mass ode: control must cover the output grid");

  // Breakpoints: output times and control nodes, so every step sees a smooth G.
  std::vector<double> knots(grid.data(), grid.data() + grid.size());
  knots.insert(knots.begin(), 0.0);
  for (Eigen::Index k = 0; k < G.nodes(); ++k)
    if (G.grid()(k) > 0 && G.grid()(k) < T) knots.push_back(G.grid()(k));
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  auto f = [&](double t, double m) { return tilted_mass_rhs(m, gamma, G(t)); };
  auto solve = [&](int sub) {
    VectorXd out(grid.size());
    double m = m0;
    std::size_t next = 0;
    Eigen::Index k = 0;
    for (; k < grid.size() && grid(k) == 0.0; ++k) out(k) = m0;
    for (next = 1; next < knots.size(); ++next) {
      const double a = knots[next - 1], b = knots[next];
      const double h = (b - a) / sub;
      for (int i = 0; i < sub; ++i) {
        const double t = a + i * h;
        const double k1 = f(t, m);
        const double k2 = f(t + h / 2, m + h / 2 * k1);
        const double k3 = f(t + h / 2, m + h / 2 * k2);
        const double k4 = f(t + h, m + h * k3);
        m += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      while (k < grid.size() && grid(k) <= b) out(k++) = m;
    }
    return out;
  };

  OdeSolution s;
  s.grid = grid;
  s.method = OdeMethod::RK4;
  int sub = 2;
  VectorXd prev = solve(sub);
  for (int iter = 0; iter < 24; ++iter) {
    sub *= 2;
    VectorXd cur = solve(sub);
    const double gap = (cur - prev).cwiseAbs().maxCoeff();
    prev = std::move(cur);
    if (gap < tol) {
      s.values = prev.cwiseMax(0.0).cwiseMin(1.0);
      s.substeps = sub;
      s.refinement_gap = gap;
      return s;
    }
  }
  throw DegenerateData("tilted mass ode: step halving did not converge (is G too steep?)");
}

PdeSolution heat_neumann(const DensityProfile& rho0, const VectorXd& times, const HeatOptions& options) {
  rho0.validate();
  check_grid(times);
  require(rho0.cells() >= 3, "heat_neumann: mesh too coarse (need at least 3 cells)");
  require(options.dt > 0, "heat_neumann: dt must be positive");

  const Eigen::Index M = rho0.cells();
  const VectorXd w = rho0.widths();
  const VectorXd c = rho0.centers();

  // Flux between cells j and j+1 is (rho_{j+1} - rho_j) / (c_{j+1} - c_j);
  // the ghost cells mirror the end cells, so the boundary flux vanishes.
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index j = 0; j + 1 < M; ++j) {
    const double k = 1.0 / (c(j + 1) - c(j));
    trip.emplace_back(j, j, k);
    trip.emplace_back(j + 1, j + 1, k);
    trip.emplace_back(j, j + 1, -k);
    trip.emplace_back(j + 1, j, -k);
  }
  Eigen::SparseMatrix<double> K(M, M);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> W(M, M);
  W.reserve(Eigen::VectorXi::Constant(M, 1));
  for (Eigen::Index j = 0; j < M; ++j) W.insert(j, j) = w(j);

  PdeSolution sol;
  sol.times = times;
  sol.edges = rho0.edges;
  sol.values.resize(times.size(), M);

  VectorXd rho = rho0.values;
  double t = 0;
  double factored_dt = -1;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  auto step = [&](double dt) {
    if (dt != factored_dt) {
      solver.compute(Eigen::SparseMatrix<double>(W + dt * K));
      if (solver.info() != Eigen::Success) throw DegenerateData("heat_neumann: factorization failed");
      factored_dt = dt;
    }
    rho = solver.solve(VectorXd(w.cwiseProduct(rho)));
  };
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double span = times(k) - t;
    if (span > 0) {
      const auto n = static_cast<long>(std::ceil(span / options.dt - 1e-9));
      const double dt = span / static_cast<double>(n);
      for (long i = 0; i < n; ++i) step(dt);
      t = times(k);
    }
    sol.values.row(k) = rho.transpose();
  }
  return sol;
}

DecayFit decay_check(const PdeSolution& sol, double fit_from) {
  const VectorXd w = sol.widths();
  const Eigen::Index K = sol.times.size();
  require(K >= 2, "decay_check: need at least two time points");
  VectorXd dist2(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double mean = sol.values.row(k).dot(w);
    dist2(k) = (sol.values.row(k).transpose().array() - mean).square().matrix().dot(w);
  }
  if (dist2(0) < 1e-24) throw DegenerateData("decay_check: initial distance to the mean below 1e-12, nothing to fit");

  // Points below roundoff level carry no information about the rate.
  std::vector<double> ts, ys;
  for (Eigen::Index k = 0; k < K; ++k)
    if (sol.times(k) >= fit_from && dist2(k) > 1e-26) {
      ts.push_back(sol.times(k));
      ys.push_back(std::log(dist2(k)));
    }
  if (ts.size() < 2) throw DegenerateData("decay_check: fewer than two usable points in the fit window");
  if (ys.front() - ys.back() < 1.0) throw DegenerateData("decay_check: less than one e-fold of decay in the fit window");

  const auto n = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd A(n, 2);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = ts[static_cast<std::size_t>(i)];
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  DecayFit fit;
  fit.intercept = coef(0);
  fit.rate = -coef(1);
  fit.residual = std::sqrt((A * coef - y).squaredNorm() / static_cast<double>(n));
  fit.points = static_cast<int>(n);
  return fit;
}

}  // namespace slowssep
