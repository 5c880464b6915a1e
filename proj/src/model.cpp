#include "nlslab/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "nlslab/error.hpp"

namespace nlslab {

namespace {

double bisect_root(const std::function<double(double)>& f, double a, double b) {
  auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-12; };
  auto r = boost::math::tools::bisect(f, a, b, tol);
  return 0.5 * (r.first + r.second);
}

double integrate_g(const NonlinearityModel& model, double E, double xi) {
  auto g = [&](double s) { return eval_g_I(model, E, s, 0.0).g; };
  double err = 0.0;
  double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, xi, 15, 1e-14, &err);
  double scale = std::abs(E) * xi * xi + 1e-300;
  if (!std::isfinite(val) || err > 1e-10 * scale)
    throw LabError(ErrorKind::NumericalFailure, "quadrature of g did not converge");
  return val;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::NumericalFailure: return "numerical failure";
    case ErrorKind::HypothesisViolated: return "hypothesis violated";
    case ErrorKind::NoGroundState: return "no ground state located";
    case ErrorKind::DegenerateBasis: return "degenerate basis";
    case ErrorKind::UnresolvedSpectrum: return "unresolved spectrum";
    case ErrorKind::BlowUp: return "blow-up or instability detected";
    case ErrorKind::DecompositionLost: return "decomposition lost";
    case ErrorKind::DegenerateConfiguration: return "degenerate configuration";
    case ErrorKind::VelocitySeparation: return "velocity separation violated";
  }
  return "unknown";
}

NonlinearityModel::NonlinearityModel(double p) : p_(p) {
  require(std::isfinite(p) && p > 0.0, "nonlinearity exponent must be positive");
}

NonlinearityModel NonlinearityModel::from_config(const std::string& kind, double p, const std::string& sign) {
  require(kind == "power", "unsupported nonlinearity kind '" + kind + "'");
  require(sign == "focusing", "unsupported nonlinearity sign '" + sign + "'");
  return NonlinearityModel(p);
}

double NonlinearityModel::F(double s) const {
  if (s == 0.0) return 0.0;
  return -std::pow(s, p_);
}

double NonlinearityModel::dF(double s) const {
  if (p_ == 1.0) return -1.0;
  if (s == 0.0) return p_ > 1.0 ? 0.0 : -INFINITY;
  return -p_ * std::pow(s, p_ - 1.0);
}

double NonlinearityModel::d2F(double s) const {
  if (p_ == 1.0) return 0.0;
  if (s == 0.0) return p_ > 2.0 ? 0.0 : (p_ == 2.0 ? -2.0 : -INFINITY);
  return -p_ * (p_ - 1.0) * std::pow(s, p_ - 2.0);
}

double NonlinearityModel::U(double s) const {
  if (s == 0.0) return 0.0;
  return -std::pow(s, p_ + 1.0) / (p_ + 1.0);
}

bool NonlinearityModel::energy_subcritical(int d) const {
  if (d <= 2) return true;
  return p_ < 2.0 / (d - 2);
}

bool NonlinearityModel::mass_subcritical(int d) const { return p_ < 2.0 / d; }

bool NonlinearityModel::m_window_ok(int d) const {
  double m = default_m();
  if (m < 4.0) return false;
  if (d == 3) return m < 4.0 / (d - 2) + 2.0;
  return true;
}

GI eval_g_I(const NonlinearityModel& model, double E, double xi, double lambda) {
  require(std::isfinite(E) && std::isfinite(xi) && std::isfinite(lambda), "non-finite input to eval_g_I");
  require(xi >= 0.0, "xi must be nonnegative");
  double s = xi * xi;
  double g = E * xi + model.F(s) * xi;
  double dg = E + model.F(s) + 2.0 * s * model.dF(s);
  if (xi == 0.0) return {0.0, 0.0};
  return {g, -lambda * xi * dg + (lambda + 2.0) * g};
}

HypothesisReport check_hypotheses(const NonlinearityModel& model, double E, int d) {
  require(E > 0.0 && std::isfinite(E), "E must be positive");
  require(d >= 1, "dimension must be positive");
  HypothesisReport rep;
  rep.E = E;
  rep.d = d;
  rep.h0_upper = model.energy_subcritical(d);
  rep.h0_lower = model.mass_subcritical(d);
  if (!rep.h0_upper)
    throw LabError(ErrorKind::HypothesisViolated, "H0 growth bound p < 2/(d-2) fails");

  auto g = [&](double x) { return eval_g_I(model, E, x, 0.0).g; };
  auto dg = [&](double x) {
    double s = x * x;
    return E + model.F(s) + 2.0 * s * model.dF(s);
  };

  // H1-i: bracket the sign change of g.
  double lo = 1e-8 * std::sqrt(E);
  if (!(g(lo) > 0.0)) throw LabError(ErrorKind::HypothesisViolated, "H1 violated: g not positive near 0");
  double hi = lo;
  while (g(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e12) throw LabError(ErrorKind::HypothesisViolated, "H1 violated: g has no sign change");
  }
  rep.xi0 = bisect_root(g, hi / 2.0, hi);
  rep.dg_xi0 = dg(rep.xi0);
  bool sign_ok = rep.dg_xi0 < 0.0;
  for (int k = 1; k <= 256 && sign_ok; ++k) {
    double below = rep.xi0 * k / 257.0;
    double above = rep.xi0 * (1.0 + k / 32.0);
    sign_ok = g(below) > 0.0 && g(above) < 0.0;
  }

  // H1-ii: root of G(xi) = int_0^xi g beyond xi0.
  auto G = [&](double x) { return integrate_g(model, E, x); };
  double a = rep.xi0, b = 2.0 * rep.xi0;
  while (G(b) > 0.0) {
    a = b;
    b *= 2.0;
    if (b > 1e12) throw LabError(ErrorKind::HypothesisViolated, "H1 violated: integral of g has no root");
  }
  rep.xi1 = bisect_root(G, a, b);
  rep.int_g_xi1 = G(rep.xi1);
  rep.h1 = sign_ok && std::abs(rep.int_g_xi1) < 1e-9 * E * rep.xi1 * rep.xi1;

  // H2: for each sampled xi > xi0 locate lambda on a log grid where I(xi, .) changes
  // sign, refine by bisection, then verify the sign pattern in t.
  rep.h2 = "pass";
  const int n_xi = 32;
  for (int i = 1; i <= n_xi; ++i) {
    double xi = rep.xi0 * (1.0 + 4.0 * i / n_xi);
    auto Ix = [&](double lam) { return eval_g_I(model, E, xi, lam).I; };
    double lam = -1.0;
    const int n_lam = 121;
    double prev_l = 1e-3, prev_v = Ix(prev_l);
    for (int k = 1; k < n_lam && lam < 0.0; ++k) {
      double l = std::pow(10.0, -3.0 + 6.0 * k / (n_lam - 1));
      double v = Ix(l);
      if (prev_v == 0.0) lam = prev_l;
      else if ((prev_v < 0.0) != (v < 0.0)) lam = bisect_root(Ix, prev_l, l);
      prev_l = l;
      prev_v = v;
    }
    if (lam < 0.0) {
      rep.h2 = "undetermined";
      break;
    }
    bool ok = true;
    for (int k = 1; k <= 512 && ok; ++k) {
      double t = k <= 256 ? xi * k / 256.0 : xi * std::exp(std::log(100.0) * (k - 256) / 256.0);
      double It = eval_g_I(model, E, t, lam).I;
      double slack = 1e-9 * (E * t + std::abs(model.F(t * t)) * t);
      if (t < xi && It < -slack) ok = false;
      if (t > xi && It > slack) ok = false;
    }
    if (!ok) {
      rep.h2 = "undetermined";
      break;
    }
    rep.xi_samples.push_back(xi);
    rep.lambda_profile.push_back(lam);
  }
  return rep;
}

}  // namespace nlslab
