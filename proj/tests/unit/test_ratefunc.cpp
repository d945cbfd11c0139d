#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slowssep/error.hpp"
#include "slowssep/ratefunc.hpp"

using namespace slowssep;

namespace {

MassPath relaxation(double m0, double gamma, double T, Eigen::Index n) {
  return MassPath::sample([=](double t) { return gamma + (m0 - gamma) * std::exp(-2 * t); },
                          [=](double t) { return -2 * (m0 - gamma) * std::exp(-2 * t); }, uniform_grid(T, n));
}

// s -> a*(T1 - s), rising from a*(T1) to m.
MassPath reversed_relaxation(double m, double gamma, double T1, Eigen::Index n) {
  return MassPath::sample([=](double s) { return gamma + (m - gamma) * std::exp(-2 * (T1 - s)); },
                          [=](double s) { return 2 * (m - gamma) * std::exp(-2 * (T1 - s)); }, uniform_grid(T1, n));
}

MassPath smooth_path(Eigen::Index intervals) {
  return MassPath::sample([](double t) { return 0.4 + 0.2 * std::sin(2 * t); },
                          [](double t) { return 0.4 * std::cos(2 * t); }, uniform_grid(1.5, intervals));
}

}  // namespace

TEST_SUITE("ratefunc") {
  TEST_CASE("A_G") {
    CHECK(eval_A_G(0.3, 0.0, 0.7) == 0.0);
    CHECK(eval_A_G(0.5, std::log(2.0), 0.25) == doctest::Approx(-0.125).epsilon(1e-14));
    CHECK(eval_A_G(1.0, std::log(2.0), 0.5) == doctest::Approx(-0.5).epsilon(1e-14));
    // Derivatives against central differences.
    const double a = 0.3, g = 0.4, G = 0.7, h = 1e-5;
    CHECK(eval_A_G_prime(a, G, g) == doctest::Approx((eval_A_G(a, G + h, g) - eval_A_G(a, G - h, g)) / (2 * h)).epsilon(1e-8));
    CHECK(eval_A_G_second(a, G, g) ==
          doctest::Approx((eval_A_G_prime(a, G + h, g) - eval_A_G_prime(a, G - h, g)) / (2 * h)).epsilon(1e-8));
  }

  TEST_CASE("J: trivial controls and constant integrands") {
    const auto a = smooth_path(200);
    CHECK(eval_J(a, ControlPath::constant(0, 1.5), 0.3).value == 0.0);
    const auto c = MassPath(uniform_grid(1.0, 4), VectorXd::Constant(5, 0.5));
    CHECK(eval_J(c, ControlPath::constant(std::log(2.0), 1.0), 0.5).value == doctest::Approx(-0.25).epsilon(1e-13));
  }

  TEST_CASE("J agrees with an independent Simpson evaluation") {
    const auto a = smooth_path(4001);
    auto G = [](double t) { return 0.5 * std::cos(3 * t) + 0.2; };
    const auto control = ControlPath::sample(G, uniform_grid(1.5, 4000));
    const auto rep = eval_J(a, control, 0.35);
    const double ref = oracle::J_smooth([](double t) { return 0.4 + 0.2 * std::sin(2 * t); }, G,
                                        [](double t) { return -1.5 * std::sin(3 * t); }, 0.35, 1.5);
    CHECK(std::abs(rep.value - ref) < 1e-6);
    CHECK(rep.error_estimate < 1e-6);
    CHECK_THROWS_AS(eval_J(a, ControlPath::constant(0.1, 1.0), 0.35), InvalidParameter);
  }

  TEST_CASE("closed-form H") {
    const auto H0 = closed_form_H(relaxation(0.9, 0.3, 2.0, 100), 0.3);
    CHECK(H0.values().cwiseAbs().maxCoeff() < 1e-12);

    const MassPath one(uniform_grid(1.0, 1), VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 0.5));
    const auto H1 = closed_form_H(one, 0.5);
    CHECK(H1.values()(0) == doctest::Approx(std::log((0.5 + std::sqrt(1.25)) / 1.0)).epsilon(1e-14));
    CHECK(H1.values()(0) == doctest::Approx(0.481212).epsilon(1e-6));
    CHECK(eval_A_G_prime(0.5, H1.values()(0), 0.5) == doctest::Approx(0.5).epsilon(1e-13));

    const double g = 0.4;
    const auto rise = reversed_relaxation(0.8, g, 1.5, 300);
    const auto H2 = closed_form_H(rise, g);
    for (Eigen::Index k = 0; k < rise.nodes(); ++k) {
      const double ak = rise.values()(k);
      CHECK(H2.values()(k) == doctest::Approx(std::log((1 - g) * ak / (g * (1 - ak)))).epsilon(1e-10));
    }

    const MassPath touching(uniform_grid(1.0, 2), (VectorXd(3) << 0.5, 0.8, 1.0).finished());
    CHECK_THROWS_AS(closed_form_H(touching, 0.5), SingularPath);
  }

  TEST_CASE("I via closed-form H") {
    CHECK(std::abs(eval_I_closed(relaxation(0.1, 0.6, 3.0, 300), 0.6).value) < 1e-12);
    const MassPath held(uniform_grid(1.0, 10), VectorXd::Constant(11, 0.9), VectorXd::Zero(11));
    CHECK(eval_I_closed(held, 0.5).value == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(eval_I_closed(held, 0.5).value ==
          doctest::Approx(2 * std::pow(std::sqrt(0.5 * 0.1) - std::sqrt(0.5 * 0.9), 2)).epsilon(1e-12));

    // Reversed relaxation from a*(2) to 0.75 at gamma = 0.5 costs S(0.75) - S(a*(2)).
    const double aT1 = 0.5 + 0.25 * std::exp(-4.0);
    const auto rise = reversed_relaxation(0.75, 0.5, 2.0, 8000);
    const double expected = entropy_S(0.75, 0.5) - entropy_S(aT1, 0.5);
    CHECK(expected == doctest::Approx(0.130770).epsilon(1e-5));
    CHECK(eval_I_closed(rise, 0.5).value == doctest::Approx(expected).epsilon(1e-7));
    CHECK(corrected_appendix_cost(0.75, aT1, 0.5) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("appendix closed form as printed") {
    CHECK(appendix_cost(0.7, 0.3, 0.3) == doctest::Approx(entropy_S(0.7, 0.3)).epsilon(1e-13));
    CHECK(std::abs(appendix_cost(0.5, 0.5, 0.5)) < 1e-15);
    const double aT1 = 0.5 + 0.25 * std::exp(-4.0);
    CHECK(aT1 == doctest::Approx(0.504579).epsilon(1e-6));
    CHECK(std::abs(appendix_cost(0.75, aT1, 0.5) - 0.121569) < 2e-6);
    CHECK_THROWS_AS(appendix_cost(1.0, 0.5, 0.5), InvalidParameter);
  }

  TEST_CASE("numeric supremum") {
    const auto relax = relaxation(0.8, 0.4, 1.0, 100);
    const auto r0 = sup_I_numeric(relax, 0.4, relax.nodes());
    CHECK(std::abs(r0.value) < 1e-6);
    CHECK(r0.control->sup_norm() < 1e-9);

    for (const MassPath& a : {smooth_path(300), reversed_relaxation(0.75, 0.5, 2.0, 400)}) {
      const double g = 0.5;
      const double closed = eval_I_closed(a, g).value;
      const auto num = sup_I_numeric(a, g, a.nodes());
      CHECK(std::abs(num.value - closed) <= 1e-3 * closed);
      CHECK(num.value >= eval_J(a, *num.control, g).value - 1e-12);
    }

    SupOptions opt;
    opt.initial_mass = 0.3;
    const auto inf = sup_I_numeric(relax, 0.4, 20, opt);
    CHECK(inf.infinite);
    CHECK(std::isinf(inf.value));
    opt.initial_mass = 0.8;
    CHECK_FALSE(sup_I_numeric(relax, 0.4, 20, opt).infinite);

    SupOptions tight;
    tight.max_iterations = 1;
    tight.gradient_tol = 1e-14;
    try {
      sup_I_numeric(smooth_path(100), 0.3, 101, tight);
      FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
      CHECK(e.last_iterate.nodes() == 101);
      CHECK(std::isfinite(e.last_value));
    }
  }

  TEST_CASE("structural properties") {
    const double g = 0.45;
    const auto a = smooth_path(1200);
    const double whole = eval_I_closed(a, g).value;
    // Time additivity over a split at node 500.
    const double parts = eval_I_closed(a.slice(0, 500), g).value + eval_I_closed(a.slice(500, 1200), g).value;
    CHECK(parts == doctest::Approx(whole).epsilon(1e-10));
    // Any control gives a lower bound.
    for (double amp : {-1.0, -0.3, 0.2, 0.8}) {
      const auto G = ControlPath::sample([&](double t) { return amp * std::cos(t); }, uniform_grid(1.5, 60));
      CHECK(eval_J(a, G, g).value <= whole + 1e-9);
    }
    // Nonnegative pointwise Lagrangian: every sub-interval has nonnegative cost.
    for (Eigen::Index k = 0; k + 100 <= 1200; k += 100) CHECK(eval_I_closed(a.slice(k, k + 100), g).value >= -1e-12);
  }

  TEST_CASE("entropy and quasi-potential") {
    CHECK(entropy_S(0.3, 0.3) == 0.0);
    CHECK(entropy_S(0.75, 0.5) == doctest::Approx(0.130812).epsilon(1e-6));
    CHECK(entropy_S(1.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(entropy_S(0.0, 0.2) == doctest::Approx(-std::log(0.8)).epsilon(1e-15));
    for (double m = 0.02; m < 0.98; m += 0.05) {
      CHECK(entropy_S(m, 0.35) == doctest::Approx(oracle::entropy(m, 0.35)).epsilon(1e-14));
      // Midpoint convexity.
      CHECK(entropy_S(m + 0.01, 0.35) <= (entropy_S(m, 0.35) + entropy_S(m + 0.02, 0.35)) / 2 + 1e-15);
    }
    CHECK(quasi_potential_V(0.5, 0.5, PotentialMode::NumericInf).value == 0.0);
    CHECK(quasi_potential_V(0.6, 0.5, PotentialMode::Formula).value == entropy_S(0.6, 0.5));
    const auto v = quasi_potential_V(0.75, 0.5, PotentialMode::NumericInf);
    CHECK(v.value >= entropy_S(0.75, 0.5) - 1e-8);
    CHECK(std::abs(v.value - 0.130812) < 0.02 * 0.130812);
    CHECK(v.t1 > 0.5);

    double prev = 1e9;
    for (double m : {0.1, 0.2, 0.3, 0.4}) {
      const double val = quasi_potential_V(m, 0.45, PotentialMode::NumericInf).value;
      CHECK(val < prev);
      prev = val;
    }
    prev = -1;
    for (double m : {0.5, 0.6, 0.7, 0.8}) {
      const double val = quasi_potential_V(m, 0.45, PotentialMode::NumericInf).value;
      CHECK(val > prev);
      prev = val;
    }
    // The two-segment cost decreases toward S(m) as T1 grows.
    CHECK(two_segment_cost(0.75, 0.5, 1) > two_segment_cost(0.75, 0.5, 4));
  }

  TEST_CASE("profile potential W") {
    CHECK(profile_potential_W(DensityProfile::sample([](double) { return 0.3; }, 10), 0.3) == 0.0);
    CHECK(profile_potential_W(DensityProfile::sample([](double) { return 0.8; }, 7), 0.3) ==
          doctest::Approx(entropy_S(0.8, 0.3)).epsilon(1e-14));
    const double w = profile_potential_W(DensityProfile::sample([](double x) { return x; }, 20000), 0.5);
    CHECK(w == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-6));
  }
}
