#include <doctest.h>

#include <cmath>

#include "nlslab/error.hpp"
#include "nlslab/groundstate.hpp"

using namespace nlslab;

namespace {
// tests/oracles/ground_state_shooting.py (DOP853, rtol 1e-13, bisection to 1e-13).
constexpr double kPhi0CubicD3 = 4.337387679977013;
constexpr double kPhi0HalfD3 = 4.191682954442484;
}  // namespace

TEST_CASE("d=1 cubic matches sqrt(2) sech") {
  NonlinearityModel m(1.0);
  auto pr = solve_ground_state(m, 1.0, 1);
  CHECK(pr.phi0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t i = 0; i < pr.r.size(); i += 7) {
    worst = std::max(worst, std::abs(pr.phi[i] - std::sqrt(2.0) / std::cosh(pr.r[i])));
  }
  CHECK(worst < 1e-9);
  // Interpolation between samples and beyond the grid.
  for (double r : {0.12345, 3.3333, 17.77, 45.0}) {
    CHECK(std::abs(pr.eval(r) - std::sqrt(2.0) / std::cosh(r)) < 1e-9 * std::max(1.0, std::exp(-r) * 1e9));
    CHECK(pr.eval_dphi(r) == doctest::Approx(-std::sqrt(2.0) * std::tanh(r) / std::cosh(r)).epsilon(1e-7));
  }
  // Tail amplitude: sqrt(2) sech r ~ 2 sqrt(2) e^{-r}, and T(r) = e^{-r} in d = 1.
  CHECK(pr.tail_C == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("d=3 cubic matches the independent shooting oracle") {
  NonlinearityModel m(1.0);
  auto pr = solve_ground_state(m, 1.0, 3);
  CHECK(std::abs(pr.phi0 - kPhi0CubicD3) < 1e-9);
  auto half = solve_ground_state(NonlinearityModel(0.5), 1.0, 3);
  CHECK(std::abs(half.phi0 - kPhi0HalfD3) < 1e-9);
  auto four = solve_ground_state(m, 4.0, 3);
  CHECK(four.phi0 == doctest::Approx(2.0 * pr.phi0).epsilon(1e-10));
}

TEST_CASE("profile invariants") {
  for (int d : {1, 3}) {
    NonlinearityModel m(1.0);
    auto pr = solve_ground_state(m, 1.0, d);
    CHECK(pr.ode_residual(m) < 1e-8);
    double core = 0.8 * pr.r_max();
    for (std::size_t i = 1; i < pr.r.size() && pr.r[i] < core; ++i) {
      REQUIRE(pr.phi[i] > 0.0);
      REQUIRE(pr.phi[i] < pr.phi[i - 1]);
    }
    // Tail ratio over the last decade.
    double ref = 0.0, drift = 0.0;
    for (std::size_t i = pr.r.size() * 9 / 10; i < pr.r.size(); ++i) {
      double v = pr.phi[i] * std::exp(pr.r[i]) * std::pow(pr.r[i], (d - 1) / 2.0);
      if (ref == 0.0) ref = v;
      drift = std::max(drift, std::abs(v / ref - 1.0));
    }
    CHECK(drift < 0.05);
  }
  CHECK_THROWS_AS(solve_ground_state(NonlinearityModel(1.0), 1.0, 3, {1e-3, 10.0}), LabError);
}

TEST_CASE("phi_E and mass norms, d=1 closed forms") {
  NonlinearityModel m(1.0);
  auto pr = solve_ground_state(m, 1.0, 1);
  auto phiE = profile_E_derivative(m, pr);
  CHECK(phiE[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-7));
  CHECK(std::abs(pr.dphi_E[0]) < 1e-12);
  auto nm = mass_norms(pr);
  CHECK(nm.n == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(nm.e == doctest::Approx(2.0).epsilon(1e-7));

  auto p4 = solve_ground_state(m, 4.0, 1);
  profile_E_derivative(m, p4);
  auto n4 = mass_norms(p4);
  CHECK(n4.n == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(n4.e == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("phi_E agrees with the scaling identity phi_E = (phi/(2p) + r phi'/2)/E") {
  for (double p : {0.5, 1.0}) {
    NonlinearityModel m(p);
    auto pr = solve_ground_state(m, 1.0, 3);
    profile_E_derivative(m, pr);
    double worst = 0.0;
    for (std::size_t i = 0; i < pr.r.size(); ++i) {
      double expect = pr.phi[i] / (2 * p) + pr.r[i] * pr.dphi[i] / 2;
      worst = std::max(worst, std::abs(pr.phi_E[i] - expect));
    }
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("scaling law and two routes to e(E)") {
  for (int d : {1, 3}) {
    NonlinearityModel m(1.0);
    auto base = solve_ground_state(m, 1.0, d);
    double n1 = mass_norms(base).n;
    for (double E : {0.5, 2.0, 4.0}) {
      auto pr = solve_ground_state(m, E, d);
      double expect = std::pow(E, 1.0 - d / 2.0) * n1;
      CHECK(mass_norms(pr).n == doctest::Approx(expect).epsilon(1e-4));
    }
    profile_E_derivative(m, base);
    double e_quad = mass_norms(base).e;
    double dE = 1e-3;
    double np = mass_norms(solve_ground_state(m, 1.0 + dE, d)).n;
    double nm = mass_norms(solve_ground_state(m, 1.0 - dE, d)).n;
    double e_fd = (np - nm) / dE;  // d/dE of 2n
    CHECK(e_quad == doctest::Approx(e_fd).epsilon(1e-4));
  }
}

TEST_CASE("profile family reproduces direct solves") {
  NonlinearityModel m(1.0);
  auto fam = ProfileFamily::build(m, 1.0, 3);
  auto direct = solve_ground_state(m, 2.5, 3);
  profile_E_derivative(m, direct);
  for (double r : {0.0, 0.3, 1.7, 5.0, 9.0}) {
    CHECK(fam.phi(r, 2.5) == doctest::Approx(direct.eval(r)).epsilon(1e-8));
    CHECK(fam.phi_E(r, 2.5) == doctest::Approx(direct.eval_phi_E(r)).epsilon(1e-5).scale(1.0));
  }
  auto nd = mass_norms(direct);
  auto nf = fam.norms(2.5);
  CHECK(nf.n == doctest::Approx(nd.n).epsilon(1e-8));
  CHECK(nf.e == doctest::Approx(nd.e).epsilon(1e-5));
}
