#pragma once

#include <functional>

#include <Eigen/Dense>

#include "slowssep/lattice.hpp"

namespace slowssep {

/// pi^N(eta) = (1/N) sum_x eta(x) delta_{x/N}, stored through its configuration.
struct EmpiricalMeasure {
  Configuration config;

  explicit EmpiricalMeasure(Configuration c) : config(std::move(c)) {}
  int lattice_n() const { return config.lattice_n(); }
};

/// Piecewise-constant density on a partition of [0,1].
template <typename Scalar>
struct BasicDensityProfile {
  Vec<Scalar> edges;   ///< M+1 increasing points, edges(0) = 0, edges(M) = 1
  Vec<Scalar> values;  ///< M cell densities in [0,1]

  Eigen::Index cells() const { return values.size(); }
  Vec<Scalar> widths() const { return edges.tail(cells()) - edges.head(cells()); }
  Vec<Scalar> centers() const { return (edges.tail(cells()) + edges.head(cells())) / Scalar(2); }

  /// M equal cells with values f(center).
  static BasicDensityProfile sample(const std::function<Scalar(Scalar)>& f, Eigen::Index cells) {
    require(cells >= 1, "density profile: need at least one cell");
    BasicDensityProfile p;
    p.edges = Vec<Scalar>::LinSpaced(cells + 1, Scalar(0), Scalar(1));
    p.values.resize(cells);
    for (Eigen::Index j = 0; j < cells; ++j) p.values(j) = f((p.edges(j) + p.edges(j + 1)) / 2);
    return p;
  }

  void validate() const {
    require(cells() >= 1 && edges.size() == cells() + 1, "density profile: edges/values size mismatch");
    require(std::abs(edges(0)) < 1e-12 && std::abs(edges(cells()) - 1) < 1e-12, "density profile: mesh must span [0,1]");
    for (Eigen::Index j = 0; j < cells(); ++j) {
      require(edges(j + 1) > edges(j), "density profile: edges must increase");
      require(values(j) >= 0 && values(j) <= 1, "density profile: values must lie in [0,1]");
    }
  }
};

using DensityProfile = BasicDensityProfile<double>;

/// count / N.
double total_mass(const EmpiricalMeasure& e);

/// (1/N) sum_x eta(x) F(x/N).
double pair_with_test(const EmpiricalMeasure& e, const std::function<double(double)>& F);

/// Coarse-grains the sites 1..N-1 into M contiguous blocks whose sizes differ
/// by at most one. Cell j spans [first/(N-1), (last+1)/(N-1)) in site units, so
/// widths are proportional to site counts.
DensityProfile block_density(const EmpiricalMeasure& e, int cells);

}  // namespace slowssep
