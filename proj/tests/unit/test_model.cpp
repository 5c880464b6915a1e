#include <doctest.h>

#include <cmath>

#include "nlslab/error.hpp"
#include "nlslab/model.hpp"

using namespace nlslab;

TEST_CASE("pure power evaluators") {
  NonlinearityModel m(1.0);
  CHECK(m.F(0.0) == 0.0);
  CHECK(m.F(2.0) == doctest::Approx(-2.0));
  NonlinearityModel q(0.5);
  CHECK(q.F(0.0) == 0.0);
  for (double s : {0.1, 1.0, 3.7, 12.0}) {
    CHECK(q.dF(s) == doctest::Approx(-0.5 * std::pow(s, -0.5)));
    CHECK(q.U(s) == doctest::Approx(-std::pow(s, 1.5) / 1.5));
  }
  CHECK_THROWS_AS(NonlinearityModel(-1.0), LabError);
  CHECK_THROWS_AS(NonlinearityModel::from_config("exp", 1.0, "focusing"), LabError);
}

TEST_CASE("U' = F by finite differences and U = int F by quadrature") {
  for (double p : {0.5, 1.0, 1.5}) {
    NonlinearityModel m(p);
    for (double s = 0.25; s < 20.0; s *= 1.7) {
      double h = 1e-5 * s;
      double fd = (m.U(s + h) - m.U(s - h)) / (2 * h);
      CHECK(std::abs(fd - m.F(s)) <= 1e-6 * std::abs(m.F(s)));
      double fd2 = (m.F(s + h) - m.F(s - h)) / (2 * h);
      CHECK(std::abs(fd2 - m.dF(s)) <= 1e-6 * std::abs(m.dF(s)));
      // Simpson on [0, s] for U.
      int n = 2000;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        acc += w * m.F(s * i / n);
      }
      acc *= s / n / 3.0;
      CHECK(acc == doctest::Approx(m.U(s)).epsilon(1e-5));
    }
  }
}

TEST_CASE("H0 growth bounds on a sampled grid") {
  for (double p : {0.5, 1.0}) {
    NonlinearityModel m(p);
    for (double xi = 1.0; xi < 1e4; xi *= 1.3) {
      CHECK(std::abs(m.F(xi)) <= 1.0 * std::pow(xi, p) * (1 + 1e-12));
      CHECK(std::abs(m.dF(xi)) <= 2.0 * std::pow(xi, p - 1) * (1 + 1e-12));
      CHECK(std::abs(m.d2F(xi)) <= 2.0 * std::pow(xi, p - 2) * (1 + 1e-12));
    }
  }
  CHECK(NonlinearityModel(1.0).energy_subcritical(3));
  CHECK_FALSE(NonlinearityModel(2.0).energy_subcritical(3));
  CHECK_FALSE(NonlinearityModel(1.0).mass_subcritical(3));
  CHECK(NonlinearityModel(0.5).mass_subcritical(3));
  CHECK(NonlinearityModel(1.0).m_window_ok(3));
  CHECK_FALSE(NonlinearityModel(0.5).m_window_ok(3));
}

TEST_CASE("eval_g_I examples") {
  NonlinearityModel m(1.0);
  auto a = eval_g_I(m, 1.0, 0.0, 3.0);
  CHECK(a.g == 0.0);
  CHECK(a.I == 0.0);
  auto b = eval_g_I(m, 1.0, 1.0, 1.0);
  CHECK(b.g == doctest::Approx(0.0));
  CHECK(b.I == doctest::Approx(2.0));
  auto c = eval_g_I(m, 1.0, 2.0, 0.0);
  CHECK(c.g == doctest::Approx(-6.0));
  CHECK(c.I == doctest::Approx(-12.0));
  CHECK_THROWS_AS(eval_g_I(m, 1.0, -1.0, 0.0), LabError);
  CHECK_THROWS_AS(eval_g_I(m, 1.0, NAN, 0.0), LabError);
}

TEST_CASE("check_hypotheses roots") {
  NonlinearityModel m(1.0);
  auto r1 = check_hypotheses(m, 1.0, 3);
  CHECK(std::abs(r1.xi0 - 1.0) < 1e-11);
  CHECK(std::abs(r1.xi1 - std::sqrt(2.0)) < 1e-11);
  CHECK(r1.dg_xi0 < 0.0);
  CHECK(r1.h1);
  CHECK(r1.h2 == "pass");
  CHECK(r1.h0_upper);
  CHECK_FALSE(r1.h0_lower);
  auto r4 = check_hypotheses(m, 4.0, 3);
  CHECK(std::abs(r4.xi0 - 2.0) < 1e-11);
  CHECK_THROWS_AS(check_hypotheses(NonlinearityModel(3.0), 1.0, 3), LabError);
  CHECK_THROWS_AS(check_hypotheses(m, 0.0, 3), LabError);
}

TEST_CASE("H2 lambda matches the pure-power closed form") {
  // For F = -s^p, I(t, lam) = t [2E + (lam (q-1) - 2) t^{q-1}], q = 2p+1.
  for (double p : {0.5, 1.0}) {
    NonlinearityModel m(p);
    double E = 1.3;
    auto rep = check_hypotheses(m, E, 3);
    REQUIRE(rep.h2 == "pass");
    REQUIRE(!rep.xi_samples.empty());
    double q = 2 * p + 1;
    for (std::size_t i = 0; i < rep.xi_samples.size(); ++i) {
      double xi = rep.xi_samples[i];
      double expect = (2.0 - 2.0 * E / std::pow(xi, q - 1)) / (q - 1);
      CHECK(rep.lambda_profile[i] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("xi0 < xi1 across the sampled E interval and determinism") {
  NonlinearityModel m(1.0);
  for (double E = 0.25; E <= 4.0; E *= 1.5) {
    auto r = check_hypotheses(m, E, 3);
    CHECK(r.xi0 < r.xi1);
    CHECK(std::abs(r.int_g_xi1) < 1e-9);
  }
  auto a = check_hypotheses(m, 1.7, 3);
  auto b = check_hypotheses(m, 1.7, 3);
  CHECK(a.xi0 == b.xi0);
  CHECK(a.xi1 == b.xi1);
  CHECK(a.lambda_profile == b.lambda_profile);
}
