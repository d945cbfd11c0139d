#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slowssep/error.hpp"
#include "slowssep/lattice.hpp"
#include "slowssep/observables.hpp"
#include "slowssep/random.hpp"

using namespace slowssep;

namespace {

SimParams small(int N, TimeScale ts, double alpha = 0.5, double beta = 0.5) {
  SimParams p;
  p.N = N;
  p.alpha = alpha;
  p.beta = beta;
  p.time_scale = ts;
  return p;
}

// Empirical law of the particle count at T over independent runs of simulate().
Eigen::VectorXd simulated_mass_law(SimParams p, const Configuration& c0, int runs) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p.N);
  for (int r = 0; r < runs; ++r) {
    p.seed = substream(99, 1, static_cast<std::uint64_t>(r));
    h(simulate(p, c0).final.particle_count()) += 1;
  }
  return h / runs;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("configuration basics") {
    Configuration c(4, {1, 0, 1});
    CHECK(c.sites() == 3);
    CHECK(c.particle_count() == 2);
    c.swap_bond(1);
    CHECK(c == Configuration(4, {0, 1, 1}));
    CHECK_THROWS_AS(Configuration(4, {1, 0}), InvalidParameter);
    CHECK_THROWS_AS(Configuration(4, {1, 2, 0}), InvalidParameter);
    CHECK_THROWS_AS(Configuration(2), InvalidParameter);
  }

  TEST_CASE("rate table, hand enumeration") {
    const Configuration c(4, {1, 0, 1});
    const RateTable d = transition_rates(c, small(4, TimeScale::Diffusive), 0);
    CHECK(d.active_bonds == 2);
    CHECK(d.bulk() == doctest::Approx(32.0));
    CHECK(d.left_remove == doctest::Approx(0.5));
    CHECK(d.right_remove == doctest::Approx(0.5));
    CHECK(d.total() == doctest::Approx(33.0));
    const RateTable a = transition_rates(c, small(4, TimeScale::Accelerated), 0);
    CHECK(a.bulk() == doctest::Approx(128.0));
    CHECK(a.total() == doctest::Approx(132.0));
  }

  TEST_CASE("zero tilt leaves rates unchanged; tilt scales insert and remove") {
    SimParams p = small(5, TimeScale::Diffusive, 0.3, 0.6);
    const Configuration c(5, {0, 1, 1, 1});
    const RateTable base = transition_rates(c, p, 0.2);
    p.tilt = ControlPath::constant(0.0, p.horizon);
    const RateTable zero = transition_rates(c, p, 0.2);
    CHECK(zero.total() == base.total());
    p.tilt = ControlPath::constant(0.7, p.horizon);
    const RateTable t = transition_rates(c, p, 0.2);
    CHECK(t.left_insert == doctest::Approx(0.3 * std::exp(0.7)));
    CHECK(t.right_remove == doctest::Approx(0.4 * std::exp(-0.7)));
  }

  TEST_CASE("parameter validation") {
    SimParams p;
    p.horizon = 0;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = SimParams{};
    p.alpha = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = SimParams{};
    p.N = 2;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = SimParams{};
    CHECK_THROWS_AS(simulate(p, Configuration(10)), InvalidParameter);
    CHECK(p.gamma() == doctest::Approx(0.5));
  }

  TEST_CASE("determinism and event-log invariants") {
    SimParams p = small(12, TimeScale::Accelerated, 0.2, 0.8);
    p.horizon = 0.5;
    p.seed = 7;
    SimulationOptions opt;
    opt.record_events = true;
    const Configuration c0(12);
    const Trajectory a = simulate(p, c0, opt), b = simulate(p, c0, opt);
    REQUIRE(a.events.size() == b.events.size());
    REQUIRE(a.event_count == a.events.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.events.size(); ++i)
      identical &= a.events[i].time == b.events[i].time && a.events[i].site == b.events[i].site &&
                   a.events[i].kind == b.events[i].kind;
    CHECK(identical);

    // Replay: swaps conserve the count, flips change it by one at the ends.
    Configuration c = c0;
    double t = 0;
    bool ok = true;
    for (const auto& e : a.events) {
      ok &= e.time > t && e.log_weight_increment == 0.0;
      t = e.time;
      const int before = c.particle_count();
      if (e.kind == EventKind::Swap) {
        ok &= c.occupied(e.site) != c.occupied(e.site + 1);
        c.swap_bond(e.site);
        ok &= c.particle_count() == before;
      } else {
        ok &= (e.kind == EventKind::FlipLeft && e.site == 1) || (e.kind == EventKind::FlipRight && e.site == 11);
        c.flip(e.site);
        ok &= std::abs(c.particle_count() - before) == 1;
      }
    }
    CHECK(ok);
    CHECK(c == a.final);
    CHECK(a.log_weight == 0.0);
  }

  TEST_CASE("observer sees right-continuous states on the requested grid") {
    SimParams p = small(8, TimeScale::Accelerated);
    p.horizon = 1;
    SimulationOptions opt;
    opt.observe_step = 0.25;
    std::vector<double> seen;
    opt.observer = [&](double t, const Configuration&) { seen.push_back(t); };
    const Trajectory tr = simulate(p, Configuration(8), opt);
    CHECK(seen == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});

    // The observation at T equals the final configuration.
    Configuration last;
    opt.observer = [&](double, const Configuration& c) { last = c; };
    const Trajectory tr2 = simulate(p, Configuration(8), opt);
    CHECK(last == tr2.final);
  }

  TEST_CASE("reservoir densities near one fill both boundary sites") {
    SimParams p = small(6, TimeScale::Diffusive, 0.999, 0.999);
    p.horizon = 40;
    int both = 0;
    for (int r = 0; r < 50; ++r) {
      p.seed = static_cast<std::uint64_t>(r);
      const auto f = simulate(p, Configuration(6)).final;
      both += f.occupied(1) && f.occupied(5);
    }
    CHECK(both >= 45);
  }

  TEST_CASE("mass law at T matches the matrix exponential (untilted, both scales)") {
    for (TimeScale ts : {TimeScale::Diffusive, TimeScale::Accelerated}) {
      SimParams p = small(4, ts, 0.3, 0.9);
      p.horizon = ts == TimeScale::Diffusive ? 0.7 : 0.2;
      const Configuration c0(4, {1, 0, 0});
      oracle::Model m{4, 0.3, 0.9, p.bulk_rate(), p.boundary_rate(), 0};
      Eigen::VectorXd p0 = Eigen::VectorXd::Zero(8);
      p0(oracle::encode({1, 0, 0})) = 1;
      const auto exact = oracle::mass_law(oracle::transient(oracle::generator(m), p0, p.horizon), 4);
      const int runs = 20000;
      CHECK(oracle::max_z(simulated_mass_law(p, c0, runs), exact, runs) < 4.5);
    }
  }

  TEST_CASE("tilted dynamics: constant tilt law matches the tilted generator") {
    SimParams p = small(4, TimeScale::Diffusive, 0.3, 0.6);
    p.horizon = 0.8;
    p.tilt = ControlPath::constant(0.9, p.horizon);
    const Configuration c0(4);
    oracle::Model m{4, 0.3, 0.6, p.bulk_rate(), 1, 0.9};
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(8);
    p0(0) = 1;
    const auto exact = oracle::mass_law(oracle::transient(oracle::generator(m), p0, p.horizon), 4);
    const int runs = 20000;
    CHECK(oracle::max_z(simulated_mass_law(p, c0, runs), exact, runs) < 4.5);
  }

  TEST_CASE("change of measure: replay agrees with the running weight; zero tilt gives zero") {
    SimParams p = small(6, TimeScale::Accelerated, 0.2, 0.7);
    p.horizon = 1.0;
    p.tilt = ControlPath::sample([](double t) { return 0.8 * std::sin(3 * t) - 0.2; }, uniform_grid(1.0, 13));
    SimulationOptions opt;
    opt.record_events = true;
    for (std::uint64_t s = 0; s < 5; ++s) {
      p.seed = s;
      const Trajectory tr = simulate(p, Configuration(6, {0, 1, 0, 1, 1}), opt);
      CHECK(change_of_measure_log_weight(tr, *p.tilt, p) == doctest::Approx(tr.log_weight).epsilon(1e-9));
      // Increments cover everything up to the last event; only the tail after it is missing.
      double sum = 0;
      for (const auto& e : tr.events) sum += e.log_weight_increment;
      SimParams upto = p;
      upto.horizon = tr.events.back().time;
      Trajectory head = tr;
      head.final = Configuration();
      CHECK(change_of_measure_log_weight(head, *p.tilt, upto) == doctest::Approx(sum).epsilon(1e-9));
      CHECK(change_of_measure_log_weight(tr, ControlPath::constant(0.0, 1.0), p) == 0.0);
    }
    Trajectory bare = simulate(p, Configuration(6));
    CHECK_THROWS_AS(change_of_measure_log_weight(bare, *p.tilt, p), InvalidParameter);
    opt.record_events = true;
    Trajectory tr = simulate(p, Configuration(6), opt);
    CHECK_THROWS_AS(change_of_measure_log_weight(tr, ControlPath::constant(0.1, 0.5), p), InvalidParameter);
  }

  TEST_CASE("change of measure on a hand-built path equals the Girsanov formula") {
    // N = 4, diffusive (b = 1), G(t) = t on [0, 1]. Path: empty until 0.25,
    // insertion at site 1, swap (1,2) at 0.5, removal? none; insertion at site 3 at 0.75.
    SimParams p = small(4, TimeScale::Diffusive, 0.4, 0.7);
    p.horizon = 1.0;
    const ControlPath G = ControlPath::sample([](double t) { return t; }, uniform_grid(1.0, 4));
    Trajectory tr;
    tr.initial = Configuration(4);
    tr.events = {{0.25, EventKind::FlipLeft, 1, 0}, {0.5, EventKind::Swap, 1, 0}, {0.75, EventKind::FlipRight, 3, 0}};
    tr.event_count = 3;
    // log dP/dP^G = -sum_jumps (+-G) + int sum_x [r(1-eta)(e^G - 1) + (1-r) eta (e^{-G} - 1)] ds
    auto in = [](double r, double a, double b) { return r * ((std::exp(b) - std::exp(a)) - (b - a)); };
    auto out = [](double r, double a, double b) { return (1 - r) * ((std::exp(-a) - std::exp(-b)) - (b - a)); };
    double expected = -(0.25 + 0.75);
    expected += in(0.4, 0, 0.25) + in(0.7, 0, 0.25);      // both ends empty
    expected += out(0.4, 0.25, 0.5) + in(0.7, 0.25, 0.5);  // site 1 occupied
    expected += in(0.4, 0.5, 0.75) + in(0.7, 0.5, 0.75);   // particle moved to site 2
    expected += in(0.4, 0.75, 1) + out(0.7, 0.75, 1);      // site 3 occupied
    CHECK(change_of_measure_log_weight(tr, G, p) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("tilted runs reweighted to the untilted law (unbiasedness, mean one)") {
    SimParams p = small(4, TimeScale::Diffusive, 0.3, 0.6);
    p.horizon = 0.8;
    p.tilt = ControlPath::sample([](double t) { return 1.0 - t; }, uniform_grid(0.8, 8));
    oracle::Model m{4, 0.3, 0.6, p.bulk_rate(), 1, 0};
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(8);
    p0(0) = 1;
    const auto exact = oracle::mass_law(oracle::transient(oracle::generator(m), p0, p.horizon), 4);
    const int runs = 40000;
    Eigen::VectorXd wsum = Eigen::VectorXd::Zero(4), wsq = Eigen::VectorXd::Zero(4);
    double total = 0, total_sq = 0;
    for (int r = 0; r < runs; ++r) {
      p.seed = substream(5, 2, static_cast<std::uint64_t>(r));
      const Trajectory tr = simulate(p, Configuration(4));
      const double w = std::exp(tr.log_weight);
      const int k = tr.final.particle_count();
      wsum(k) += w;
      wsq(k) += w * w;
      total += w;
      total_sq += w * w;
    }
    const double mean = total / runs;
    const double se = std::sqrt((total_sq / runs - mean * mean) / runs);
    CHECK(std::abs(mean - 1) < 4 * se);
    for (int k = 0; k < 4; ++k) {
      const double est = wsum(k) / runs;
      const double sek = std::sqrt((wsq(k) / runs - est * est) / runs);
      CHECK(std::abs(est - exact(k)) < 4.5 * sek + 1e-12);
    }
  }

  TEST_CASE("product Bernoulli law is stationary when alpha = beta") {
    // Independent replicas started from the product law must still be product-distributed at T.
    SimParams p = small(10, TimeScale::Accelerated, 0.3, 0.3);
    p.horizon = 1.5;
    const int runs = 4000;
    Eigen::VectorXd occ = Eigen::VectorXd::Zero(9);
    double pairs = 0;
    for (int r = 0; r < runs; ++r) {
      Xoshiro256 rng(substream(8, 4, static_cast<std::uint64_t>(r)));
      Configuration c0(10);
      for (int x = 1; x <= 9; ++x) c0.set(x, rng.uniform() < 0.3);
      p.seed = substream(8, 5, static_cast<std::uint64_t>(r));
      const Configuration f = simulate(p, c0).final;
      for (int x = 1; x <= 9; ++x) occ(x - 1) += f.occupied(x);
      pairs += f.occupied(4) * f.occupied(6);
    }
    occ /= runs;
    const double se = std::sqrt(0.21 / runs);
    for (int x = 0; x < 9; ++x) CHECK(std::abs(occ(x) - 0.3) < 3.5 * se);
    CHECK(std::abs(pairs / runs - 0.09) < 3.5 * std::sqrt(0.09 * 0.91 / runs));
  }

  TEST_CASE("hydrodynamic mean mass, N = 64, 200 replicas") {
    SimParams p = small(64, TimeScale::Accelerated, 0.2, 0.8);
    p.horizon = 0.25;
    SimulationOptions opt;
    opt.observe_times = {0.05, 0.1, 0.15, 0.2, 0.25};
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (int r = 0; r < 200; ++r) {
      p.seed = substream(0, 3, static_cast<std::uint64_t>(r));
      int k = 0;
      opt.observer = [&](double, const Configuration& c) { mean(k++) += total_mass(EmpiricalMeasure(c)) / 200; };
      simulate(p, Configuration(64), opt);
    }
    for (int k = 0; k < 5; ++k) CHECK(std::abs(mean(k) - 0.5 * (1 - std::exp(-2 * opt.observe_times[static_cast<std::size_t>(k)]))) < 0.03);
  }
}
