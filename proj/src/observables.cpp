#include "slowssep/observables.hpp"

#include "slowssep/error.hpp"

namespace slowssep {

double total_mass(const EmpiricalMeasure& e) { return e.config.particle_count() / static_cast<double>(e.lattice_n()); }

double pair_with_test(const EmpiricalMeasure& e, const std::function<double(double)>& F) {
  const double N = e.lattice_n();
  double acc = 0;
  for (int x = 1; x <= e.config.sites(); ++x)
    if (e.config.occupied(x)) acc += F(x / N);
  return acc / N;
}

DensityProfile block_density(const EmpiricalMeasure& e, int cells) {
  const int sites = e.config.sites();
  require(cells >= 1 && cells <= sites, "block_density: need 1 <= M <= N-1 cells");
  DensityProfile p;
  p.edges.resize(cells + 1);
  p.values.resize(cells);
  const int base = sites / cells, extra = sites % cells;
  int x = 1;
  p.edges(0) = 0;
  for (int j = 0; j < cells; ++j) {
    const int len = base + (j < extra ? 1 : 0);
    int occ = 0;
    for (int i = 0; i < len; ++i, ++x) occ += e.config.occupied(x);
    p.values(j) = occ / static_cast<double>(len);
    p.edges(j + 1) = (x - 1) / static_cast<double>(sites);
  }
  p.edges(cells) = 1.0;
  return p;
}

}  // namespace slowssep
