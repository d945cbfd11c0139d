#include "slowssep/ratefunc.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

#include "slowssep/error.hpp"

namespace slowssep {

const char* to_string(RateMethod m) {
  switch (m) {
    case RateMethod::Quadrature:
      return "quadrature";
    case RateMethod::ClosedFormH:
      return "closed-form-H";
    case RateMethod::NumericSup:
      return "numeric-sup";
    case RateMethod::AppendixFormula:
      return "appendix-formula";
    case RateMethod::Entropy:
      return "entropy";
    case RateMethod::NumericInf:
      return "numeric-inf";
  }
  return "?";
}

namespace {

void check_gamma(double gamma) { require(gamma > 0 && gamma < 1, "gamma must lie in (0,1)"); }

// Sorted union of the path grid and the control nodes inside it.
VectorXd union_grid(const VectorXd& base, const VectorXd& extra) {
  const double t0 = base(0), t1 = base(base.size() - 1);
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  std::vector<double> u(base.data(), base.data() + base.size());
  for (Eigen::Index k = 0; k < extra.size(); ++k)
    if (extra(k) > t0 + eps && extra(k) < t1 - eps) u.push_back(extra(k));
  std::sort(u.begin(), u.end());
  std::vector<double> out;
  for (double t : u)
    if (out.empty() || t - out.back() > eps) out.push_back(t);
  return Eigen::Map<VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

VectorXd with_midpoints(const VectorXd& g) {
  VectorXd r(2 * g.size() - 1);
  for (Eigen::Index k = 0; k + 1 < g.size(); ++k) {
    r(2 * k) = g(k);
    r(2 * k + 1) = (g(k) + g(k + 1)) / 2;
  }
  r(r.size() - 1) = g(g.size() - 1);
  return r;
}

// Trapezoid weights on a grid.
VectorXd trapezoid_weights(const VectorXd& t) {
  const Eigen::Index n = t.size();
  VectorXd w = VectorXd::Zero(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double h = t(k + 1) - t(k);
    w(k) += h / 2;
    w(k + 1) += h / 2;
  }
  return w;
}

// Coefficients c with sum_k c_k G_k = sum_k (a_{k+1} - a_k)(G_k + G_{k+1})/2,
// i.e. a_T G_T - a_0 G_0 - int G' a for piecewise-linear a and G.
VectorXd transport_coefficients(const VectorXd& a) {
  const Eigen::Index n = a.size();
  VectorXd c = VectorXd::Zero(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double d = (a(k + 1) - a(k)) / 2;
    c(k) += d;
    c(k + 1) += d;
  }
  return c;
}

// Linear coefficients of the transport part a_T G_T - a_0 G_0 - int G' a in the
// nodal values of G. With a supplied derivative this is int G a' by the same
// trapezoid rule as the cost term, so the two parts are consistent and the
// discrete supremum is attained at the pointwise optimum; otherwise the exact
// summation by parts for piecewise-linear a.
VectorXd transport(const MassPath& a, const VectorXd& t, const VectorXd& av, const VectorXd& w) {
  if (!a.has_derivative()) return transport_coefficients(av);
  const GridFunction<double> da(a.grid(), a.derivative());
  VectorXd c(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) c(k) = w(k) * da(t(k));
  return c;
}

double discrete_J(const MassPath& a, const ControlPath& G, double gamma, const VectorXd& t) {
  VectorXd av(t.size()), gv(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    av(k) = a(t(k));
    gv(k) = G(t(k));
  }
  const VectorXd w = trapezoid_weights(t);
  double cost = 0;
  for (Eigen::Index k = 0; k < t.size(); ++k) cost += w(k) * eval_A_G(av(k), gv(k), gamma);
  return transport(a, t, av, w).dot(gv) - cost;
}

}  // namespace

RateReport eval_J(const MassPath& a, const ControlPath& G, double gamma) {
  check_gamma(gamma);
  const double t0 = a.start(), T = a.horizon();
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  require(G.start() <= t0 + tol && G.horizon() >= T - tol, "eval_J: control grid does not cover the path grid");
  const VectorXd t = union_grid(a.grid(), G.grid());
  RateReport r;
  r.method = RateMethod::Quadrature;
  r.value = discrete_J(a, G, gamma, t);
  r.error_estimate = std::abs(r.value - discrete_J(a, G, gamma, with_midpoints(t))) / 3;
  r.mesh_nodes = t.size();
  return r;
}

ControlPath closed_form_H(const MassPath& a, double gamma) {
  check_gamma(gamma);
  const VectorXd da = a.derivative();
  VectorXd H(a.nodes());
  for (Eigen::Index k = 0; k < a.nodes(); ++k) {
    const double ak = a.values()(k), d = da(k);
    if (!(ak > 0 && ak < 1)) throw SingularPath("closed_form_H: path touches 0 or 1, the optimal control is unbounded");
    const double c = 16 * gamma * (1 - gamma) * ak * (1 - ak);
    const double root = std::sqrt(d * d + c);
    // a' + root cancels when a' < 0; use c / (root - a') there.
    const double num = d >= 0 ? d + root : c / (root - d);
    H(k) = std::log(num / (4 * gamma * (1 - ak)));
    const double residual = eval_A_G_prime(ak, H(k), gamma) - d;
    if (std::abs(residual) > 1e-10 * std::max(1.0, std::abs(d)))
      throw DegenerateData("closed_form_H: residual check failed at node " + std::to_string(k));
  }
  return ControlPath(a.grid(), H);
}

RateReport eval_I_closed(const MassPath& a, double gamma) {
  ControlPath H = closed_form_H(a, gamma);
  RateReport r = eval_J(a, H, gamma);
  r.method = RateMethod::ClosedFormH;
  r.control = std::move(H);
  return r;
}

RateReport sup_I_numeric(const MassPath& a, double gamma, Eigen::Index basis_size, const SupOptions& options) {
  check_gamma(gamma);
  require(basis_size >= 1, "sup_I_numeric: basis_size must be at least 1");
  RateReport r;
  r.method = RateMethod::NumericSup;
  r.basis_size = basis_size;
  if (options.initial_mass && std::abs(a.values()(0) - *options.initial_mass) > 1e-12) {
    r.value = std::numeric_limits<double>::infinity();
    r.infinite = true;
    return r;
  }

  const double t0 = a.start(), T = a.horizon();
  // Basis nodes; the path grid itself when it is uniform with the same size.
  VectorXd nodes;
  if (basis_size == 1) {
    nodes.resize(1);
    nodes(0) = t0;
  } else if (basis_size == a.nodes()) {
    nodes = a.grid();
  } else {
    nodes = VectorXd::LinSpaced(basis_size, t0, T);
  }
  const VectorXd t = basis_size == 1 ? a.grid() : union_grid(a.grid(), nodes);
  const Eigen::Index n = t.size();

  // P: basis coefficients -> values on t (hat interpolation).
  Eigen::SparseMatrix<double> P(n, basis_size);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (basis_size == 1) {
        trip.emplace_back(i, 0, 1.0);
        continue;
      }
      const double* first = nodes.data();
      auto it = std::upper_bound(first, first + basis_size, t(i));
      Eigen::Index k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(it - first) - 1, 0, basis_size - 2);
      const double w = std::clamp((t(i) - nodes(k)) / (nodes(k + 1) - nodes(k)), 0.0, 1.0);
      if (w < 1) trip.emplace_back(i, k, 1 - w);
      if (w > 0) trip.emplace_back(i, k + 1, w);
    }
    P.setFromTriplets(trip.begin(), trip.end());
  }
  VectorXd av(n);
  for (Eigen::Index i = 0; i < n; ++i) av(i) = a(t(i));
  const VectorXd w = trapezoid_weights(t);
  const VectorXd c = transport(a, t, av, w);

  auto objective = [&](const VectorXd& gv) {
    double cost = 0;
    for (Eigen::Index i = 0; i < n; ++i) cost += w(i) * eval_A_G(av(i), gv(i), gamma);
    return c.dot(gv) - cost;
  };

  VectorXd coef = VectorXd::Zero(basis_size);
  VectorXd gv = P * coef;
  double value = objective(gv);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  VectorXd inner(n), curv(n);
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      inner(i) = c(i) - w(i) * eval_A_G_prime(av(i), gv(i), gamma);
      curv(i) = w(i) * eval_A_G_second(av(i), gv(i), gamma);
    }
    const VectorXd grad = P.transpose() * inner;
    if (grad.cwiseAbs().maxCoeff() < options.gradient_tol) {
      r.value = value;
      r.iterations = iter;
      r.mesh_nodes = n;
      r.error_estimate = grad.cwiseAbs().maxCoeff();
      r.control = ControlPath(t, gv);
      return r;
    }
    if (iter == options.max_iterations) break;
    const Eigen::SparseMatrix<double> Hm = P.transpose() * curv.asDiagonal() * P;
    solver.compute(Hm);
    if (solver.info() != Eigen::Success) break;
    const VectorXd step = solver.solve(grad);
    // Backtracking (Armijo) on the concave objective.
    const double slope = grad.dot(step);
    double s = 1;
    for (int ls = 0; ls < 60; ++ls, s /= 2) {
      const VectorXd trial = coef + s * step;
      const VectorXd tg = P * trial;
      const double tv = objective(tg);
      if (std::isfinite(tv) && tv >= value + 1e-4 * s * slope) {
        coef = trial;
        gv = tg;
        value = tv;
        break;
      }
    }
  }
  throw NonConvergence("sup_I_numeric: gradient did not reach tolerance within the iteration budget", ControlPath(t, gv),
                       value);
}

double two_segment_cost(double m, double gamma, double t1, Eigen::Index nodes_per_unit) {
  check_gamma(gamma);
  require(m > 0 && m < 1, "two_segment_cost: m must lie in (0,1)");
  require(t1 > 0, "two_segment_cost: T1 must be positive");
  const double aT1 = gamma + (m - gamma) * std::exp(-2 * t1);
  if (aT1 == gamma) return 0.0;
  // Bridge gamma -> a*(T1) on [0,1].
  const double kappa = aT1 - gamma;
  const MassPath bridge = MassPath::sample([&](double s) { return gamma + kappa * s; }, [&](double) { return kappa; },
                                           uniform_grid(1.0, nodes_per_unit));
  // Reversed relaxation s -> a*(T1 - s) on [0, T1]: a' = 2(a - gamma).
  const auto steps = std::max<Eigen::Index>(16, static_cast<Eigen::Index>(std::ceil(t1 * static_cast<double>(nodes_per_unit))));
  const MassPath rise = MassPath::sample([&](double s) { return gamma + (m - gamma) * std::exp(-2 * (t1 - s)); },
                                         [&](double s) { return 2 * (m - gamma) * std::exp(-2 * (t1 - s)); },
                                         uniform_grid(t1, steps));
  return eval_I_closed(bridge, gamma).value + eval_I_closed(rise, gamma).value;
}

RateReport quasi_potential_V(double m, double gamma, PotentialMode mode) {
  check_gamma(gamma);
  require(m >= 0 && m <= 1, "quasi_potential_V: m must lie in [0,1]");
  RateReport r;
  if (mode == PotentialMode::Formula) {
    r.method = RateMethod::Entropy;
    r.value = entropy_S(m, gamma);
    return r;
  }
  r.method = RateMethod::NumericInf;
  // The construction needs m in (0,1); the endpoints are approached from inside.
  const double mm = std::clamp(m, 1e-9, 1 - 1e-9);
  if (std::abs(mm - gamma) < 1e-15) {
    r.value = 0;
    return r;
  }
  const std::vector<double> scan = {0.5, 1, 2, 4, 6};
  std::vector<double> cost;
  for (double t1 : scan) cost.push_back(two_segment_cost(mm, gamma, t1));
  const auto best = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
  double lo = scan[best == 0 ? 0 : best - 1], hi = scan[std::min(best + 1, scan.size() - 1)];
  double bx = scan[best], bv = cost[best];
  int evals = static_cast<int>(scan.size());
  // Golden-section refinement on [lo, hi].
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = two_segment_cost(mm, gamma, x1), f2 = two_segment_cost(mm, gamma, x2);
  evals += 2;
  while (hi - lo > 1e-3) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = two_segment_cost(mm, gamma, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = two_segment_cost(mm, gamma, x2);
    }
    ++evals;
  }
  for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}})
    if (f < bv) {
      bv = f;
      bx = x;
    }
  r.value = bv;
  r.t1 = bx;
  r.iterations = evals;
  return r;
}

double profile_potential_W(const DensityProfile& rho, double gamma) {
  rho.validate();
  check_gamma(gamma);
  const VectorXd w = rho.widths();
  double acc = 0;
  for (Eigen::Index j = 0; j < rho.cells(); ++j) acc += w(j) * entropy_S(rho.values(j), gamma);
  return acc;
}

}  // namespace slowssep
