#include "slowssep/stationary.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <bit>
#include <cmath>
#include <memory>

#include "slowssep/error.hpp"
#include "slowssep/ratefunc.hpp"

namespace slowssep {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Generator Q (rows: from, columns: to) with bulk rate N^2 and boundary rate 1.
SpMat generator(int N, double alpha, double beta) {
  const int sites = N - 1;
  const std::uint32_t states = 1u << sites;
  const double s = static_cast<double>(N) * N;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(states) * (sites + 2));
  for (std::uint32_t eta = 0; eta < states; ++eta) {
    double out = 0;
    for (int x = 0; x + 1 < sites; ++x) {
      const std::uint32_t pair = (eta >> x) & 3u;
      if (pair == 1u || pair == 2u) {
        trip.emplace_back(eta, eta ^ (3u << x), s);
        out += s;
      }
    }
    auto flip = [&](int x, double r) {
      const bool occ = (eta >> x) & 1u;
      const double rate = occ ? 1 - r : r;
      trip.emplace_back(eta, eta ^ (1u << x), rate);
      out += rate;
    };
    flip(0, alpha);
    flip(sites - 1, beta);
    trip.emplace_back(eta, eta, -out);
  }
  SpMat Q(states, states);
  Q.setFromTriplets(trip.begin(), trip.end());
  return Q;
}

double flip_rate(std::uint32_t eta, int x, double reservoir) {
  return ((eta >> x) & 1u) ? 1 - reservoir : reservoir;
}

// Flips couple neighbouring sectors at rate O(1) while swaps mix each sector at
// rate N^2, so the chain is nearly decomposable by particle count.
VectorXd aggregation_solve(int N, double alpha, double beta, const SpMat& Q, int max_sweeps, int& sweeps) {
  const int sites = N - 1;
  const std::uint32_t states = 1u << sites;
  const double s = static_cast<double>(N) * N;
  const int last = sites - 1;

  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(sites + 1));
  std::vector<Eigen::Index> local(states);
  for (std::uint32_t eta = 0; eta < states; ++eta) {
    auto& m = members[static_cast<std::size_t>(std::popcount(eta))];
    local[eta] = static_cast<Eigen::Index>(m.size());
    m.push_back(eta);
  }

  // -Q restricted to a sector: symmetric, strictly diagonally dominant.
  std::vector<SpMat> blocks(members.size());
  using Solver = Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper>;
  std::vector<std::unique_ptr<Solver>> cg(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& m = members[k];
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::uint32_t eta = m[i];
      double out = flip_rate(eta, 0, alpha) + flip_rate(eta, last, beta);
      for (int x = 0; x + 1 < sites; ++x) {
        const std::uint32_t pair = (eta >> x) & 3u;
        if (pair == 1u || pair == 2u) {
          trip.emplace_back(static_cast<Eigen::Index>(i), local[eta ^ (3u << x)], -s);
          out += s;
        }
      }
      trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), out);
    }
    const auto size = static_cast<Eigen::Index>(m.size());
    blocks[k].resize(size, size);
    blocks[k].setFromTriplets(trip.begin(), trip.end());
    cg[k] = std::make_unique<Solver>();
    cg[k]->setTolerance(1e-14);
    cg[k]->compute(blocks[k]);
  }

  // Start from the product law at density gamma.
  const double gamma = (alpha + beta) / 2;
  VectorXd mu(states);
  for (std::uint32_t eta = 0; eta < states; ++eta)
    mu(eta) = std::pow(gamma, std::popcount(eta)) * std::pow(1 - gamma, sites - std::popcount(eta));

  const SpMat Qt = Q.transpose();
  sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    // Aggregation: birth-death chain of the count under the current conditional laws.
    VectorXd weight = VectorXd::Zero(sites + 1), up = VectorXd::Zero(sites + 1), down = VectorXd::Zero(sites + 1);
    for (std::uint32_t eta = 0; eta < states; ++eta) {
      const int k = std::popcount(eta);
      weight(k) += mu(eta);
      const double in = (((eta & 1u) == 0) ? alpha : 0.0) + ((((eta >> last) & 1u) == 0) ? beta : 0.0);
      const double rm = ((eta & 1u) ? 1 - alpha : 0.0) + (((eta >> last) & 1u) ? 1 - beta : 0.0);
      up(k) += mu(eta) * in;
      down(k) += mu(eta) * rm;
    }
    VectorXd xi(sites + 1);
    xi(0) = 1;
    for (int k = 0; k < sites; ++k) xi(k + 1) = xi(k) * (up(k) / weight(k)) / (down(k + 1) / weight(k + 1));
    xi /= xi.sum();
    for (std::uint32_t eta = 0; eta < states; ++eta) {
      const int k = std::popcount(eta);
      mu(eta) *= xi(k) / weight(k);
    }

    // Disaggregation: block Gauss-Seidel over the sectors.
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& m = members[k];
      VectorXd rhs(static_cast<Eigen::Index>(m.size())), guess(static_cast<Eigen::Index>(m.size()));
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint32_t eta = m[i];
        const std::uint32_t left = eta ^ 1u, right = eta ^ (1u << last);
        rhs(static_cast<Eigen::Index>(i)) = mu(left) * flip_rate(left, 0, alpha) + mu(right) * flip_rate(right, last, beta);
        guess(static_cast<Eigen::Index>(i)) = mu(eta);
      }
      const VectorXd sol = cg[k]->solveWithGuess(rhs, guess);
      for (std::size_t i = 0; i < m.size(); ++i) mu(m[i]) = sol(static_cast<Eigen::Index>(i));
    }
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();
    if ((Qt * mu).cwiseAbs().maxCoeff() < 1e-13) {
      ++sweeps;
      break;
    }
  }
  return mu;
}

}  // namespace

VectorXd StationaryDistribution::site_means() const {
  require(probabilities.size() > 0, "site_means: needs an exact stationary distribution");
  VectorXd mean = VectorXd::Zero(N - 1);
  for (Eigen::Index eta = 0; eta < probabilities.size(); ++eta)
    for (int x = 0; x < N - 1; ++x)
      if ((eta >> x) & 1) mean(x) += probabilities(eta);
  return mean;
}

StationaryDistribution exact_stationary(int N, double alpha, double beta, StationarySolver solver,
                                        int max_iterations) {
  require(N >= 3, "exact_stationary: N must be at least 3");
  require(alpha > 0 && alpha < 1 && beta > 0 && beta < 1, "exact_stationary: alpha and beta must lie in (0,1)");
  if (N - 1 > 20) throw CapacityError("exact_stationary: N - 1 = " + std::to_string(N - 1) + " exceeds the limit of 20 sites");

  const SpMat Q = generator(N, alpha, beta);
  const Eigen::Index n = Q.rows();
  StationaryDistribution d;
  d.N = N;
  d.alpha = alpha;
  d.beta = beta;
  VectorXd mu;

  if (solver == StationarySolver::Aggregation) {
    int sweeps = 0;
    mu = aggregation_solve(N, alpha, beta, Q, std::min(max_iterations, 500), sweeps);
    d.iterations = sweeps;
    d.method = "aggregation";
  } else if (solver == StationarySolver::Direct) {
    // Q^T mu = 0 with the last equation replaced by sum(mu) = 1.
    SpMat A = Q.transpose();
    A.prune([&](Eigen::Index row, Eigen::Index, double) { return row != n - 1; });
    SpMat ones(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(n - 1, j, 1.0);
    ones.setFromTriplets(trip.begin(), trip.end());
    A += ones;
    A.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw DegenerateData("exact_stationary: sparse LU failed");
    VectorXd rhs = VectorXd::Zero(n);
    rhs(n - 1) = 1;
    mu = lu.solve(rhs);
    // one step of iterative refinement
    mu += lu.solve(VectorXd(rhs - A * mu));
    d.method = "sparse-lu";
  } else {
    // Uniformized kernel P = I + Q / Lambda.
    const double Lambda = 2.0 * N * N * (N - 2) +
                          2.0 * std::max({alpha, 1 - alpha, beta, 1 - beta});
    mu = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const SpMat Qt = Q.transpose();
    int it = 0;
    for (; it < max_iterations; ++it) {
      const VectorXd flow = Qt * mu;
      mu += flow / Lambda;
      if (it % 64 == 0 && flow.cwiseAbs().maxCoeff() < 1e-12) break;
    }
    d.iterations = it;
    d.method = "power-iteration";
  }
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  d.residual = (Q.transpose() * mu).cwiseAbs().maxCoeff();
  d.probabilities = mu;
  d.mass_pmf = VectorXd::Zero(N);
  for (Eigen::Index eta = 0; eta < n; ++eta) d.mass_pmf(std::popcount(static_cast<std::uint32_t>(eta))) += mu(eta);
  return d;
}

StaticRateFit static_rate_estimate(const std::vector<StationaryDistribution>& dists, double m) {
  require(dists.size() >= 3, "static_rate_estimate: need at least three values of N");
  require(m >= 0 && m <= 1, "static_rate_estimate: m must lie in [0,1]");
  StaticRateFit fit;
  fit.m = m;
  const double gamma = (dists.front().alpha + dists.front().beta) / 2;
  fit.reference = entropy_S(m, gamma);
  for (const auto& d : dists) {
    require(d.mass_pmf.size() == d.N, "static_rate_estimate: distribution lacks a mass law");
    double p = 0;
    for (int k = 0; k < d.N; ++k)
      if (std::abs(k / static_cast<double>(d.N) - m) <= 0.5 / d.N + 1e-12) p += d.mass_pmf(k);
    if (!(p > 0)) throw DegenerateData("static_rate_estimate: empty probability window at N = " + std::to_string(d.N));
    fit.N.push_back(d.N);
    fit.rates.push_back(-std::log(p) / d.N);
  }
  const auto n = static_cast<Eigen::Index>(fit.N.size());
  Eigen::MatrixXd A(n, 2);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = 1.0 / fit.N[static_cast<std::size_t>(i)];
    y(i) = fit.rates[static_cast<std::size_t>(i)];
  }
  fit.extrapolated = A.colPivHouseholderQr().solve(y)(0);
  return fit;
}

}  // namespace slowssep
