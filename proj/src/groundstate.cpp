#include "nlslab/groundstate.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>
#include <cmath>
#include <numbers>

#include "nlslab/error.hpp"

namespace nlslab {

namespace {

using State = std::array<double, 2>;
using Stepper = boost::numeric::odeint::runge_kutta4<State>;

struct RadialRhs {
  const NonlinearityModel& model;
  double E;
  int d;
  void operator()(const State& y, State& dy, double r) const {
    double phi = y[0];
    dy[0] = y[1];
    dy[1] = -(d - 1) / r * y[1] + E * phi + model.F(phi * phi) * phi;
  }
};

enum class Shot { Overshoot, Undershoot, Undecided };

struct Trajectory {
  std::vector<double> phi, dphi;
  Shot outcome = Shot::Undecided;
};

double nonlin(const NonlinearityModel& m, double E, double phi) { return E * phi + m.F(phi * phi) * phi; }

double nonlin_prime(const NonlinearityModel& m, double E, double phi) {
  double s = phi * phi;
  return E + m.F(s) + 2.0 * s * m.dF(s);
}

// Integrates outward from the series start near r = 0, with substeps over the first
// grid cells where the (d-1)/r term is stiff. Stops at the first sign of the
// dichotomy: phi < 0 (overshoot) or phi' > 0 with phi > 0 (undershoot).
Trajectory shoot(const NonlinearityModel& model, double E, int d, double phi0, double h, std::size_t m,
                 bool keep) {
  constexpr int kSub = 16;
  constexpr std::size_t kRefined = 64;
  Trajectory tr;
  double a = nonlin(model, E, phi0) / d;
  double b = 3.0 * nonlin_prime(model, E, phi0) * a / (d + 2);
  double hs = h / kSub;
  State y{phi0 + a * hs * hs / 2.0 + b * hs * hs * hs * hs / 24.0, a * hs + b * hs * hs * hs / 6.0};
  RadialRhs rhs{model, E, d};
  Stepper stepper;
  for (int k = 1; k < kSub; ++k) stepper.do_step(rhs, y, k * hs, hs);
  if (keep) {
    tr.phi.reserve(m + 1);
    tr.dphi.reserve(m + 1);
    tr.phi.push_back(phi0);
    tr.dphi.push_back(0.0);
    tr.phi.push_back(y[0]);
    tr.dphi.push_back(y[1]);
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (i < kRefined) {
      for (int k = 0; k < kSub; ++k) stepper.do_step(rhs, y, i * h + k * hs, hs);
    } else {
      stepper.do_step(rhs, y, i * h, h);
    }
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
      throw LabError(ErrorKind::NumericalFailure, "radial integration produced non-finite values");
    if (keep) {
      tr.phi.push_back(y[0]);
      tr.dphi.push_back(y[1]);
    }
    if (y[0] < 0.0) {
      tr.outcome = Shot::Overshoot;
      return tr;
    }
    if (y[1] > 0.0) {
      tr.outcome = Shot::Undershoot;
      return tr;
    }
  }
  tr.outcome = (y[1] + std::sqrt(E) * y[0] > 0.0) ? Shot::Undershoot : Shot::Overshoot;
  return tr;
}

// Inward integration from r_max seeded with the asymptotic tail C*T(r).
void integrate_inward(const NonlinearityModel& model, double E, int d, double C, double h, std::size_t m,
                      std::size_t i_stop, std::vector<double>& phi, std::vector<double>& dphi) {
  RadialRhs rhs{model, E, d};
  Stepper stepper;
  double rm = m * h;
  State y{C * tail_shape(rm, E, d), C * tail_shape_derivative(rm, E, d)};
  phi[m] = y[0];
  dphi[m] = y[1];
  for (std::size_t i = m; i > i_stop; --i) {
    stepper.do_step(rhs, y, i * h, -h);
    phi[i - 1] = y[0];
    dphi[i - 1] = y[1];
  }
}

double hermite(double h, double y0, double y1, double d0, double d1, double s) {
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

double hermite_slope(double h, double y0, double y1, double d0, double d1, double s) {
  double s2 = s * s;
  return ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1;
}

double interp(const GroundStateProfile& pr, const std::vector<double>& y, const std::vector<double>& dy,
              double rr, bool slope) {
  rr = std::abs(rr);
  double x = rr / pr.h;
  std::size_t i = static_cast<std::size_t>(x);
  if (i >= y.size() - 1) i = y.size() - 2;
  double s = x - static_cast<double>(i);
  return slope ? hermite_slope(pr.h, y[i], y[i + 1], dy[i], dy[i + 1], s)
               : hermite(pr.h, y[i], y[i + 1], dy[i], dy[i + 1], s);
}

double trapezoid_radial(const GroundStateProfile& pr, const std::vector<double>& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double w = (i == 0 || i + 1 == f.size()) ? 0.5 : 1.0;
    sum += w * f[i] * std::pow(pr.r[i], pr.d - 1);
  }
  return sum * pr.h * sphere_area(pr.d);
}

}  // namespace

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0); }

double tail_shape(double r, double E, int d) {
  double k = std::sqrt(E);
  double nu = (d - 2) / 2.0;
  return std::sqrt(2.0 * k / std::numbers::pi) * std::pow(r, -nu) * std::cyl_bessel_k(std::abs(nu), k * r);
}

double tail_shape_derivative(double r, double E, int d) {
  double k = std::sqrt(E);
  double nu = (d - 2) / 2.0;
  return -k * std::sqrt(2.0 * k / std::numbers::pi) * std::pow(r, -nu) * std::cyl_bessel_k(std::abs(nu + 1.0), k * r);
}

double GroundStateProfile::eval(double rr) const {
  if (std::abs(rr) > r_max()) return tail_C * tail_shape(std::abs(rr), E, d);
  return interp(*this, phi, dphi, rr, false);
}

double GroundStateProfile::eval_dphi(double rr) const {
  double sgn = rr < 0 ? -1.0 : 1.0;
  if (std::abs(rr) > r_max()) return sgn * tail_C * tail_shape_derivative(std::abs(rr), E, d);
  return sgn * interp(*this, dphi, d2phi, rr, false);
}

double GroundStateProfile::eval_phi_E(double rr) const {
  require(has_phi_E(), "profile has no phi_E samples");
  if (std::abs(rr) > r_max()) return 0.0;
  return interp(*this, phi_E, dphi_E, rr, false);
}

double GroundStateProfile::eval_dphi_E(double rr) const {
  require(has_phi_E(), "profile has no phi_E samples");
  if (std::abs(rr) > r_max()) return 0.0;
  double sgn = rr < 0 ? -1.0 : 1.0;
  return sgn * interp(*this, phi_E, dphi_E, rr, true);
}

double GroundStateProfile::ode_residual(const NonlinearityModel& model) const {
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < r.size(); ++i) {
    double d2 = (-dphi[i + 2] + 8.0 * dphi[i + 1] - 8.0 * dphi[i - 1] + dphi[i - 2]) / (12.0 * h);
    double res = -d2 - (d - 1) / r[i] * dphi[i] + E * phi[i] + model.F(phi[i] * phi[i]) * phi[i];
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

GroundStateProfile solve_ground_state(const NonlinearityModel& model, double E, int d, const RadialGridSpec& grid) {
  require(E > 0.0 && std::isfinite(E), "E must be positive");
  HypothesisReport hyp = check_hypotheses(model, E, d);
  if (!hyp.h1) throw LabError(ErrorKind::HypothesisViolated, "H1 fails at the requested E");
  double k = std::sqrt(E);
  double h = grid.h > 0.0 ? grid.h : 1e-3 / k;
  double r_max = grid.r_max > 0.0 ? grid.r_max : 40.0 / k;
  require(r_max >= 20.0 / k * (1.0 - 1e-12), "r_max must be at least 20/sqrt(E)");
  std::size_t m = static_cast<std::size_t>(std::llround(r_max / h));
  require(m >= 16, "radial grid too coarse");

  // Bracket: amplitudes below xi1 cannot reach zero; grow the upper end until it overshoots.
  double lo = 0.5 * (hyp.xi0 + hyp.xi1);
  if (shoot(model, E, d, lo, h, m, false).outcome != Shot::Undershoot)
    throw LabError(ErrorKind::NoGroundState, "lower shooting bracket does not undershoot");
  double hi = 2.0 * lo;
  int grow = 0;
  while (shoot(model, E, d, hi, h, m, false).outcome != Shot::Overshoot) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 60) throw LabError(ErrorKind::NoGroundState, "no overshooting amplitude found");
  }
  int steps = 0;
  while (std::nextafter(lo, hi) < hi && steps < 200) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    Shot s = shoot(model, E, d, mid, h, m, false).outcome;
    if (s == Shot::Overshoot) hi = mid;
    else if (s == Shot::Undershoot) lo = mid;
    else throw LabError(ErrorKind::NumericalFailure, "shooting dichotomy lost");
    ++steps;
  }
  Trajectory tlo = shoot(model, E, d, lo, h, m, true);
  Trajectory thi = shoot(model, E, d, hi, h, m, true);
  if (tlo.outcome != Shot::Undershoot || thi.outcome != Shot::Overshoot)
    throw LabError(ErrorKind::NumericalFailure, "shooting dichotomy lost at the final bracket");

  // Junction where the bracketing trajectories still agree.
  std::size_t n_common = std::min(tlo.phi.size(), thi.phi.size());
  std::size_t im = 0;
  for (std::size_t i = 1; i < n_common; ++i) {
    double avg = 0.5 * (tlo.phi[i] + thi.phi[i]);
    if (std::abs(tlo.phi[i] - thi.phi[i]) > 1e-9 * avg) break;
    im = i;
  }
  if (im < 8) throw LabError(ErrorKind::NumericalFailure, "shooting bracket diverges immediately");

  GroundStateProfile pr;
  pr.E = E;
  pr.d = d;
  pr.p = model.p();
  pr.h = h;
  pr.phi0 = 0.5 * (lo + hi);
  pr.bisection_steps = steps;
  pr.r.resize(m + 1);
  pr.phi.assign(m + 1, 0.0);
  pr.dphi.assign(m + 1, 0.0);
  for (std::size_t i = 0; i <= m; ++i) pr.r[i] = i * h;
  for (std::size_t i = 0; i <= im; ++i) {
    pr.phi[i] = 0.5 * (tlo.phi[i] + thi.phi[i]);
    pr.dphi[i] = 0.5 * (tlo.dphi[i] + thi.dphi[i]);
  }
  double target = pr.phi[im];

  // Secant on the tail amplitude so the inward solution meets the shooting value.
  std::vector<double> phi_in(m + 1), dphi_in(m + 1);
  auto mismatch = [&](double C) {
    integrate_inward(model, E, d, C, h, m, im, phi_in, dphi_in);
    return phi_in[im] - target;
  };
  double C0 = target / tail_shape(pr.r[im], E, d);
  double C1 = C0 * (1.0 + 1e-3);
  double f0 = mismatch(C0), f1 = mismatch(C1);
  for (int it = 0; it < 50 && std::abs(f1) > 1e-15 * target; ++it) {
    if (f1 == f0) break;
    double C2 = C1 - f1 * (C1 - C0) / (f1 - f0);
    C0 = C1;
    f0 = f1;
    C1 = C2;
    f1 = mismatch(C1);
  }
  if (std::abs(f1) > 1e-12 * target) throw LabError(ErrorKind::NumericalFailure, "tail matching did not converge");
  pr.tail_C = C1;
  pr.r_match = pr.r[im];
  pr.derivative_jump = std::abs(dphi_in[im] - pr.dphi[im]);
  for (std::size_t i = im + 1; i <= m; ++i) {
    pr.phi[i] = phi_in[i];
    pr.dphi[i] = dphi_in[i];
  }
  pr.d2phi.resize(m + 1);
  pr.d2phi[0] = nonlin(model, E, pr.phi0) / d;
  for (std::size_t i = 1; i <= m; ++i)
    pr.d2phi[i] = -(d - 1) / pr.r[i] * pr.dphi[i] + nonlin(model, E, pr.phi[i]);
  return pr;
}

std::vector<double> profile_E_derivative(const NonlinearityModel& model, GroundStateProfile& profile) {
  RadialGridSpec grid{profile.h, profile.r_max()};
  auto central = [&](double dE, std::vector<double>& f, std::vector<double>& df) {
    GroundStateProfile plus = solve_ground_state(model, profile.E + dE, profile.d, grid);
    GroundStateProfile minus = solve_ground_state(model, profile.E - dE, profile.d, grid);
    f.resize(profile.r.size());
    df.resize(profile.r.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = (plus.phi[i] - minus.phi[i]) / (2.0 * dE);
      df[i] = (plus.dphi[i] - minus.dphi[i]) / (2.0 * dE);
    }
  };
  double dE = 1e-4 * profile.E;
  std::vector<double> f1, df1, f2, df2;
  central(dE, f1, df1);
  central(dE / 2.0, f2, df2);
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    scale = std::max(scale, std::abs(f1[i]));
    diff = std::max(diff, std::abs(f1[i] - f2[i]));
  }
  if (!(diff <= 1e-5 * scale))
    throw LabError(ErrorKind::NumericalFailure, "phi_E Richardson check failed");
  profile.phi_E = f1;
  profile.dphi_E = df1;
  return f1;
}

MassNorms mass_norms(const GroundStateProfile& profile) {
  require(!profile.phi.empty(), "empty profile");
  std::vector<double> sq(profile.phi.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = profile.phi[i] * profile.phi[i];
  MassNorms out;
  out.n = 0.5 * trapezoid_radial(profile, sq);
  if (profile.has_phi_E()) {
    std::vector<double> cross(sq.size());
    for (std::size_t i = 0; i < sq.size(); ++i) cross[i] = 2.0 * profile.phi[i] * profile.phi_E[i];
    out.e = trapezoid_radial(profile, cross);
  }
  if (!std::isfinite(out.n) || !std::isfinite(out.e)) throw LabError(ErrorKind::NumericalFailure, "mass quadrature");
  return out;
}

ProfileFamily::ProfileFamily(GroundStateProfile base) : base_(std::move(base)) {
  require(base_.has_phi_E(), "profile family needs phi_E");
  base_norms_ = mass_norms(base_);
}

ProfileFamily ProfileFamily::build(const NonlinearityModel& model, double E0, int d, const RadialGridSpec& grid) {
  GroundStateProfile pr = solve_ground_state(model, E0, d, grid);
  profile_E_derivative(model, pr);
  return ProfileFamily(std::move(pr));
}

double ProfileFamily::phi(double r, double E) const {
  double s = E / base_.E;
  return std::pow(s, 0.5 / base_.p) * base_.eval(std::sqrt(s) * r);
}

double ProfileFamily::dphi(double r, double E) const {
  double s = E / base_.E;
  return std::pow(s, 0.5 / base_.p + 0.5) * base_.eval_dphi(std::sqrt(s) * r);
}

double ProfileFamily::phi_E(double r, double E) const {
  double s = E / base_.E;
  return std::pow(s, 0.5 / base_.p - 1.0) * base_.eval_phi_E(std::sqrt(s) * r);
}

MassNorms ProfileFamily::norms(double E) const {
  double s = E / base_.E;
  double k = 1.0 / base_.p - base_.d / 2.0;
  return {std::pow(s, k - 1.0) * base_norms_.e, std::pow(s, k) * base_norms_.n};
}

double ProfileFamily::support_radius(double E) const {
  return std::min(base_.r_max(), 41.4 / std::sqrt(base_.E)) * std::sqrt(base_.E / E);
}

}  // namespace nlslab
