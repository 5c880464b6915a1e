#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlslab/error.hpp"
#include "nlslab/linops.hpp"
#include "nlslab/modulation.hpp"
#include "support.hpp"

using namespace nlslab;

namespace {

double max_param_diff(const SolitonParams& a, const SolitonParams& b) {
  double m = std::max(std::abs(a.beta - b.beta), std::abs(a.E - b.E));
  for (std::size_t i = 0; i < a.b.size(); ++i)
    m = std::max({m, std::abs(a.b[i] - b.b[i]), std::abs(a.v[i] - b.v[i])});
  return m;
}

FieldState state_of(const Grid& g, Field f, double t = 0.0) { return FieldState{g, std::move(f), t}; }

}  // namespace

TEST_CASE("exact soliton is a fixed point") {
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 1024, 40.0);
  SolitonParams s{0.3, 1.2, {1.5}, {0.4}};
  auto dec = modulation_project(state_of(g, soliton_state(s, fam, g)), {s}, fam);
  CHECK(dec.iters == 0);
  CHECK(max_param_diff(dec.sigma[0], s) == 0.0);
  CHECK(dec.chi.abs().maxCoeff() == 0.0);
  CHECK(dec.residual < 1e-14);
}

TEST_CASE("Newton recovers a perturbed guess") {
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 1024, 40.0);
  SolitonParams s{0.3, 1.2, {1.5}, {0.4}};
  SolitonParams guess{0.31, 1.21, {1.51}, {0.41}};
  auto dec = modulation_project(state_of(g, soliton_state(s, fam, g)), {guess}, fam);
  MESSAGE("iterations " << dec.iters << " error " << max_param_diff(dec.sigma[0], s));
  CHECK(dec.iters <= 6);
  CHECK(max_param_diff(dec.sigma[0], s) < 1e-10);
}

TEST_CASE("functionals are continuous in b across the box edge") {
  // The grid has points exactly at x - b = -L/2 for b = 0; a background that is nonzero at the edge
  // would make the residuals jump there without the edge taper.
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 512, 24.0);
  SolitonParams s{0.0, 1.0, {0.0}, {0.5}};
  Field psi = soliton_state(s, fam, g);
  psi.array() += cplx(0.3, 0.1);
  auto at = [&](double b) {
    SolitonParams q = s;
    q.b[0] = b;
    return orthogonality_residuals(g, psi, {q}, fam);
  };
  const double h = 1e-9;
  Eigen::VectorXd jump = at(h) - at(-h);
  Eigen::VectorXd slope = (at(1e-5) - at(-1e-5)) / 2e-5;
  CHECK((jump - 2 * h * slope).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two well separated solitons") {
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 2048, 80.0);
  for (double sep : {12.0, 16.0, 20.0}) {
    SolitonParams a{0.0, 1.0, {-sep / 2}, {0.0}}, b{1.0, 1.0, {sep / 2}, {0.0}};
    Field psi = soliton_state(a, fam, g) + soliton_state(b, fam, g);
    SolitonParams ga = a, gb = b;
    ga.b[0] += 0.05;
    gb.E += 0.02;
    auto dec = modulation_project(state_of(g, psi), {ga, gb}, fam);
    double err = std::max(max_param_diff(dec.sigma[0], a), max_param_diff(dec.sigma[1], b));
    // Overlap of the tails: |phi(sep)| ~ 2 sqrt(2) e^{-sep}, times a polynomial prefactor.
    double overlap = 2 * std::sqrt(2.0) * std::exp(-sep);
    MESSAGE("sep " << sep << " err " << err << " overlap " << overlap);
    CHECK(err < 10 * sep * overlap);
  }
}

TEST_CASE("Jacobian identity") {
  SUBCASE("cubic d=1") {
    Grid g(1, 1024, 40.0);
    auto r = jacobian_identity_check(1.0, fixtures::cubic_d1().family, g);
    CHECK(r.formula == doctest::Approx(16.0).epsilon(1e-6));
    CHECK(r.rel_err < 1e-3);
    auto r4 = jacobian_identity_check(4.0, fixtures::cubic_d1().family, g);
    auto n4 = fixtures::cubic_d1().family.norms(4.0);
    // e = 2/sqrt(E), n = 2 sqrt(E) in closed form.
    CHECK(n4.e == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(n4.n == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(r4.rel_err < 1e-3);
  }
  SUBCASE("p = 1/2, d=3") {
    Grid g(3, 64, 32.0);
    auto r = jacobian_identity_check(1.0, fixtures::half_d3().family, g);
    MESSAGE("fd " << r.fd_det << " formula " << r.formula << " rel " << r.rel_err);
    CHECK(r.rel_err < 1e-3);
  }
}

TEST_CASE("gauge and translation consistency") {
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 1024, 40.0);
  Fft fft(g);
  SolitonParams s{0.2, 1.1, {-1.0}, {0.3}};
  Field chi(1024);
  g.for_each([&](std::size_t i, const double* x) {
    chi[static_cast<Eigen::Index>(i)] = cplx(0.03, -0.02) * std::exp(-0.5 * (x[0] - 2.5) * (x[0] - 2.5));
  });
  Field psi = soliton_state(s, fam, g) + chi;
  auto base = modulation_project(state_of(g, psi), {s}, fam);
  const double theta = 0.7;
  SolitonParams sr = base.sigma[0];
  sr.beta += theta;
  auto rot = modulation_project(state_of(g, psi * std::polar(1.0, theta)), {sr}, fam);
  CHECK(rot.sigma[0].beta - base.sigma[0].beta == doctest::Approx(theta).epsilon(1e-9));
  CHECK(std::abs(rot.sigma[0].E - base.sigma[0].E) < 1e-9);
  CHECK(std::abs(rot.sigma[0].b[0] - base.sigma[0].b[0]) < 1e-9);
  CHECK(std::abs(rot.sigma[0].v[0] - base.sigma[0].v[0]) < 1e-9);
  CHECK(std::abs(norm2(g, rot.chi) - norm2(g, base.chi)) < 1e-9);

  // Shift by 64 grid cells; the phase convention v.x/2 moves with the soliton.
  const double shift = 64 * g.dx();
  Field moved = translate(fft, psi, Vec{shift});
  SolitonParams st = base.sigma[0];
  st.b[0] += shift;
  auto tr = modulation_project(state_of(g, moved), {st}, fam);
  CHECK(tr.sigma[0].b[0] - base.sigma[0].b[0] == doctest::Approx(shift).epsilon(1e-9));
  CHECK(std::abs(tr.sigma[0].E - base.sigma[0].E) < 1e-9);
  CHECK(std::abs(tr.sigma[0].v[0] - base.sigma[0].v[0]) < 1e-9);
  CHECK(std::abs(norm2(g, tr.chi) - norm2(g, base.chi)) < 1e-9);
  CHECK(std::abs(norm_p(g, tr.chi, 4.0) - norm_p(g, base.chi, 4.0)) < 1e-9);
}

TEST_CASE("round trip with a pre-projected remainder") {
  auto& fam = fixtures::half_d3().family;
  Grid g(3, 32, 28.0);
  NonlinearityModel m(0.5);
  LinearizedOperator op(m, fam, 1.0, g);
  NullBasis B = build_null_basis(op);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Field f(static_cast<Eigen::Index>(g.size()));
  std::vector<double> c(8);
  for (auto& x : c) x = nd(rng);
  g.for_each([&](std::size_t i, const double* x) {
    double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) + x[2] * x[2];
    f[static_cast<Eigen::Index>(i)] = 0.02 * cplx(c[2] + c[3] * x[0], c[4] + c[5] * x[1]) * std::exp(-r2 / 4);
  });
  TwoComponentField P = project_continuous(B, TwoComponentField::from_scalar(f));
  CHECK(P.conjugate_defect() < 1e-12);
  Field chi = P.upper;
  SolitonParams s = SolitonParams::at_rest(3, 1.0);
  auto dec = modulation_project(state_of(g, soliton_state(s, fam, g) + chi), {s}, fam);
  CHECK(dec.iters == 0);
  CHECK(max_param_diff(dec.sigma[0], s) < 1e-9);
  CHECK(norm2(g, dec.chi - chi) < 1e-9);
}

TEST_CASE("rates of an exact soliton") {
  auto& fam = fixtures::cubic_d1().family;
  NonlinearityModel m(1.0);
  Grid g(1, 1024, 40.0);
  SolitonParams s0{0.1, 1.3, {-2.0}, {4 * std::numbers::pi / 40.0}};
  std::vector<DecompositionRecord> recs;
  DecompositionConfig cfg;
  cfg.rates = true;
  for (int k = 0; k < 6; ++k) {
    double t = 0.25 * k;
    SolitonParams st = free_trajectory(s0, t);
    auto dec = modulation_project(state_of(g, soliton_state(st, fam, g), t), {st}, fam, cfg, &m);
    DecompositionRecord r;
    r.t = t;
    r.sigma = dec.sigma;
    r.J = dec.J;
    r.J0 = dec.J0;
    r.rhs = dec.rhs;
    recs.push_back(r);
  }
  auto rates = modulation_rates(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(rates.fd[i].cwiseAbs().maxCoeff() < 1e-8);
    CHECK(rates.solve[i].cwiseAbs().maxCoeff() < 1e-8);
    CHECK(rates.sweep[i].cwiseAbs().maxCoeff() < 1e-8);
  }
  auto coords = reconstruct_coordinates(recs);
  for (const auto& c : coords) CHECK(majorant_M0(c, {s0}) < 1e-10);
  recs[3].t += 0.01;
  CHECK_THROWS_AS(sigma_rates(recs), LabError);
}

TEST_CASE("E' decays exponentially with the separation") {
  auto& fam = fixtures::cubic_d1().family;
  NonlinearityModel m(1.0);
  Grid g(1, 2048, 80.0);
  DecompositionConfig cfg;
  cfg.rates = true;
  std::vector<double> seps, logs;
  for (double sep : {6.0, 8.0, 10.0, 12.0}) {
    SolitonParams a{0.0, 1.0, {-sep / 2}, {0.0}}, b{0.5, 1.0, {sep / 2}, {0.0}};
    Field psi = soliton_state(a, fam, g) + soliton_state(b, fam, g);
    auto dec = modulation_project(state_of(g, psi), {a, b}, fam, cfg, &m);
    Eigen::VectorXd sd = dec.J.fullPivLu().solve(-dec.rhs);
    seps.push_back(sep);
    logs.push_back(std::log(std::abs(sd[1]) + std::abs(sd[5])));
  }
  double slope = (logs.back() - logs.front()) / (seps.back() - seps.front());
  MESSAGE("log |E'| slope " << slope);
  CHECK(slope < 0.0);
  for (std::size_t i = 1; i < logs.size(); ++i) CHECK(logs[i] < logs[i - 1]);
}

TEST_CASE("weight rho") {
  CHECK(weight_rho(0.0, {}) == 1.0);
  CHECK(weight_rho(0.0, {10.0}) == doctest::Approx(1.0 + 1.0 / std::sqrt(101.0)).epsilon(1e-15));
  CHECK(weight_rho(10.0, {10.0}) - 1.0 / std::sqrt(101.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("collision times") {
  SolitonParams a{0.0, 1.0, {-10.0}, {1.0}}, b{0.0, 1.0, {10.0}, {-1.0}};
  std::vector<DecompositionRecord> recs;
  for (int k = 0; k <= 4; ++k) {
    DecompositionRecord r;
    r.t = k;
    r.sigma = {free_trajectory(a, k), free_trajectory(b, k)};
    recs.push_back(r);
  }
  auto tc = collision_times(recs, {a, b});
  REQUIRE(tc.size() == 2);
  CHECK(tc[0] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(tc[1] == doctest::Approx(10.0).epsilon(1e-12));
  // Receding pair.
  SolitonParams c{0.0, 1.0, {10.0}, {1.0}};
  auto tr = collision_times(recs, {c, b});
  CHECK(tr[0] == 0.0);
}

TEST_CASE("majorants") {
  SUBCASE("M2 of a Gaussian") {
    Grid g(3, 64, 24.0);
    const double a = 0.3, w = 1.2;
    Field chi(static_cast<Eigen::Index>(g.size()));
    g.for_each([&](std::size_t i, const double* x) {
      chi[static_cast<Eigen::Index>(i)] = a * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2 * w * w));
    });
    // int a^4 exp(-2 r^2 / w^2) = a^4 (pi w^2 / 2)^{3/2}.
    double exact = a * std::pow(std::pow(std::numbers::pi * w * w / 2, 1.5), 0.25);
    CHECK(majorant_M2(g, chi, 4.0) == doctest::Approx(exact).epsilon(1e-10));
  }
  SUBCASE("M1 of a distant bump") {
    Grid g(3, 64, 40.0);
    const double w = 0.8;
    Field chi(static_cast<Eigen::Index>(g.size()));
    g.for_each([&](std::size_t i, const double* x) {
      double r2 = (x[0] - 10.0) * (x[0] - 10.0) + x[1] * x[1] + x[2] * x[2];
      chi[static_cast<Eigen::Index>(i)] = std::exp(-r2 / (2 * w * w));
    });
    chi /= norm2(g, chi);
    SolitonParams s = SolitonParams::at_rest(3, 1.0);
    double m1 = majorant_M1(g, chi, {s}, 3.0);
    double direct = 0.0;
    g.for_each([&](std::size_t i, const double* x) {
      double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      direct += std::norm(chi[static_cast<Eigen::Index>(i)]) / std::pow(1 + r2, 3.0);
    });
    CHECK(m1 == doctest::Approx(std::sqrt(direct * g.dV())).epsilon(1e-12));
    // The bump sits at distance 10 with width 0.8: <10 - 3w>^{-3} bounds the weight on its mass.
    CHECK(m1 <= std::pow(japanese(10.0 - 3 * w), -3.0) * 1.01);
    CHECK(m1 >= std::pow(japanese(10.0 + 3 * w), -3.0) * 0.99);
  }
  SUBCASE("unperturbed") {
    Grid g(1, 256, 40.0);
    Field z = Field::Zero(256);
    SolitonParams s = SolitonParams::at_rest(1, 1.0);
    CHECK(majorant_M1(g, z, {s}, 2.5) == 0.0);
    CHECK(majorant_M2(g, z, 4.0) == 0.0);
    ModulationCoordinates c{0.0, 1.0, {0.0}, {0.0}};
    CHECK(majorant_M0({c}, {s}) == 0.0);
  }
}

TEST_CASE("decomposition failure modes") {
  auto& fam = fixtures::cubic_d1().family;
  Grid g(1, 1024, 40.0);
  SolitonParams s = SolitonParams::at_rest(1, 1.0);
  Field psi = soliton_state(s, fam, g);
  DecompositionConfig cfg;
  cfg.max_iters = 1;
  try {
    modulation_project(state_of(g, psi), {SolitonParams{0.0, 1.0, {0.4}, {0.0}}}, fam, cfg);
    FAIL("expected loss of decomposition");
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::DecompositionLost);
  }
}
