#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "slowssep/observables.hpp"
#include "slowssep/paths.hpp"

namespace slowssep {

/// A_G(a) = 2 gamma (1-a)(e^G - 1) + 2 (1-gamma) a (e^{-G} - 1).
template <typename Scalar>
Scalar eval_A_G(Scalar a, Scalar G, Scalar gamma) {
  using std::expm1;
  return 2 * gamma * (1 - a) * expm1(G) + 2 * (1 - gamma) * a * expm1(-G);
}

/// dA_G/dG and d^2A_G/dG^2.
template <typename Scalar>
Scalar eval_A_G_prime(Scalar a, Scalar G, Scalar gamma) {
  using std::exp;
  return 2 * gamma * (1 - a) * exp(G) - 2 * (1 - gamma) * a * exp(-G);
}
template <typename Scalar>
Scalar eval_A_G_second(Scalar a, Scalar G, Scalar gamma) {
  using std::exp;
  return 2 * gamma * (1 - a) * exp(G) + 2 * (1 - gamma) * a * exp(-G);
}

namespace detail {
// x log(x / y) with 0 log 0 = 0.
template <typename Scalar>
Scalar xlogxy(Scalar x, Scalar y) {
  using std::log;
  return x == Scalar(0) ? Scalar(0) : x * log(x / y);
}
}  // namespace detail

/// S(m) = m log(m/gamma) + (1-m) log((1-m)/(1-gamma)).
template <typename Scalar>
Scalar entropy_S(Scalar m, Scalar gamma) {
  require(m >= 0 && m <= 1, "entropy_S: m must lie in [0,1]");
  require(gamma > 0 && gamma < 1, "entropy_S: gamma must lie in (0,1)");
  return detail::xlogxy(m, gamma) + detail::xlogxy(Scalar(1) - m, Scalar(1) - gamma);
}

/// Closed-form cost of the reversed relaxation segment from a_T1 up to m, as
/// printed in the appendix of the source:
///   m log((1-g)m/(g(1-m))) - a_T1 log((1-g)a_T1/(g(1-a_T1))) + log((1-m)/(1-g)).
/// Quadrature of J along that segment gives this plus -log((1-a_T1)/(1-g));
/// see corrected_appendix_cost.
template <typename Scalar>
Scalar appendix_cost(Scalar m, Scalar a_T1, Scalar gamma) {
  using std::log;
  require(m > 0 && m < 1 && a_T1 > 0 && a_T1 < 1, "appendix_cost: m and a_T1 must lie in (0,1)");
  require(gamma > 0 && gamma < 1, "appendix_cost: gamma must lie in (0,1)");
  auto h = [&](Scalar a) { return log((1 - gamma) * a / (gamma * (1 - a))); };
  return m * h(m) - a_T1 * h(a_T1) + log((1 - m) / (1 - gamma));
}

/// The same segment cost with the boundary term of the log(1-a) primitive kept;
/// equals S(m) - S(a_T1).
template <typename Scalar>
Scalar corrected_appendix_cost(Scalar m, Scalar a_T1, Scalar gamma) {
  using std::log;
  return appendix_cost(m, a_T1, gamma) - log((1 - a_T1) / (1 - gamma));
}

enum class RateMethod { Quadrature, ClosedFormH, NumericSup, AppendixFormula, Entropy, NumericInf };

const char* to_string(RateMethod m);

struct RateReport {
  double value = 0;
  RateMethod method = RateMethod::Quadrature;
  Eigen::Index mesh_nodes = 0;
  Eigen::Index basis_size = 0;
  double error_estimate = 0;
  /// I_T(a|m) = +infinity because a(0) != m; value is +inf as well.
  bool infinite = false;
  int iterations = 0;
  std::optional<ControlPath> control;  ///< optimal / maximizing G when computed
  double t1 = 0;                       ///< NumericInf: relaxation time of the optimal path
};

/// Raised when the numeric supremum does not converge; carries the last iterate.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, ControlPath last, double value)
      : std::runtime_error(what), last_iterate(std::move(last)), last_value(value) {}
  ControlPath last_iterate;
  double last_value;
};

/// J_{T,G}(a) = a_T G_T - a_0 G_0 - int G' a - int A_G(a), trapezoid rule on the
/// union of both grids. A path that carries a' is integrated as int (G a' - A_G(a)). error_estimate is the Richardson estimate from one
/// mesh halving.
RateReport eval_J(const MassPath& a, const ControlPath& G, double gamma);

/// Pointwise solution H of a' = 2 gamma (1-a) e^H - 2 (1-gamma) a e^{-H}.
ControlPath closed_form_H(const MassPath& a, double gamma);

/// J evaluated at closed_form_H(a).
RateReport eval_I_closed(const MassPath& a, double gamma);

struct SupOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-9;
  /// I_T(a|m): +infinity unless |a(0) - m| <= 1e-12.
  std::optional<double> initial_mass;
};

/// sup_G J_{T,G}(a) over G spanned by basis_size hat functions on a uniform
/// grid (at the path grid when basis_size equals its node count and the grid
/// is uniform). Newton with backtracking on the concave discrete objective.
RateReport sup_I_numeric(const MassPath& a, double gamma, Eigen::Index basis_size, const SupOptions& options = {});

enum class PotentialMode { Formula, NumericInf };

/// V(m). Formula returns S(m). NumericInf minimizes the cost of the linear
/// bridge gamma -> a*(T1) on [0,1] followed by the reversed relaxation
/// a*(T1 + 1 - t), over T1 in [0.5, 6].
RateReport quasi_potential_V(double m, double gamma, PotentialMode mode);

/// Cost of that two-segment path for one T1 (sum of both segment costs).
double two_segment_cost(double m, double gamma, double t1, Eigen::Index nodes_per_unit = 2000);

/// W(rho) = int S(rho(x)) dx, cell-weighted.
double profile_potential_W(const DensityProfile& rho, double gamma);

}  // namespace slowssep
