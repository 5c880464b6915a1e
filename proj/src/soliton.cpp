#include "nlslab/soliton.hpp"

#include <cmath>

#include "nlslab/error.hpp"

namespace nlslab {

SolitonParams SolitonParams::at_rest(int d, double E, double beta) {
  SolitonParams s;
  s.beta = beta;
  s.E = E;
  s.b.assign(d, 0.0);
  s.v.assign(d, 0.0);
  return s;
}

bool SolitonParams::finite() const {
  if (!std::isfinite(beta) || !std::isfinite(E)) return false;
  for (double x : b)
    if (!std::isfinite(x)) return false;
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

void check_margin(const SolitonParams& sigma, const Grid& grid) {
  require(sigma.E > 0.0, "soliton frequency must be positive");
  require(0.5 * grid.L >= 10.0 / std::sqrt(sigma.E), "box margin below 10/sqrt(E)");
}

void add_soliton(Field& out, const SolitonParams& sigma, const ProfileFamily& family, const Grid& grid) {
  require(sigma.dim() == grid.d && static_cast<int>(sigma.v.size()) == grid.d, "soliton dimension mismatch");
  require(family.d() == grid.d, "profile dimension mismatch");
  require(sigma.finite(), "non-finite soliton parameters");
  check_margin(sigma, grid);
  require(static_cast<std::size_t>(out.size()) == grid.size(), "field size mismatch");
  const int d = grid.d;
  Vec bw(d);
  for (int a = 0; a < d; ++a) bw[a] = grid.wrap(sigma.b[a]);
  const GroundStateProfile& base = family.base();
  double s = sigma.E / base.E;
  double scale = std::pow(s, 0.5 / base.p), k = std::sqrt(s);
  grid.for_each([&](std::size_t idx, const double* x) {
    double r2 = 0.0, vx = 0.0;
    for (int a = 0; a < d; ++a) {
      double y = grid.wrap(x[a] - bw[a]);
      r2 += y * y;
      vx += sigma.v[a] * (sigma.b[a] + y);
    }
    double amp = scale * base.eval(k * std::sqrt(r2));
    out[static_cast<Eigen::Index>(idx)] += std::polar(amp, sigma.beta + 0.5 * vx);
  });
}

Field soliton_state(const SolitonParams& sigma, const ProfileFamily& family, const Grid& grid) {
  Field out = Field::Zero(static_cast<Eigen::Index>(grid.size()));
  add_soliton(out, sigma, family, grid);
  return out;
}

Field soliton_state(const SolitonParams& sigma, const GroundStateProfile& profile, const Grid& grid) {
  require(std::abs(profile.E - sigma.E) <= 1e-12 * profile.E, "profile E does not match soliton E");
  require(profile.d == grid.d && sigma.dim() == grid.d, "soliton dimension mismatch");
  check_margin(sigma, grid);
  const int d = grid.d;
  Field out(static_cast<Eigen::Index>(grid.size()));
  Vec bw(d);
  for (int a = 0; a < d; ++a) bw[a] = grid.wrap(sigma.b[a]);
  grid.for_each([&](std::size_t idx, const double* x) {
    double r2 = 0.0, vx = 0.0;
    for (int a = 0; a < d; ++a) {
      double y = grid.wrap(x[a] - bw[a]);
      r2 += y * y;
      vx += sigma.v[a] * (sigma.b[a] + y);
    }
    out[static_cast<Eigen::Index>(idx)] = std::polar(profile.eval(std::sqrt(r2)), sigma.beta + 0.5 * vx);
  });
  return out;
}

SolitonParams free_trajectory(const SolitonParams& s0, double t) {
  SolitonParams s = s0;
  s.beta = s0.beta + (s0.E - 0.25 * dot(s0.v, s0.v)) * t;
  for (std::size_t a = 0; a < s.b.size(); ++a) s.b[a] = s0.b[a] + s0.v[a] * t;
  return s;
}

CollisionGeometry collision_geometry(const SolitonParams& sj, const SolitonParams& sk, double kappa, double v_min) {
  require(sj.dim() == sk.dim(), "soliton dimension mismatch");
  require(kappa > 0.0, "kappa must be positive");
  const int d = sj.dim();
  Vec b0(d), v0(d);
  for (int a = 0; a < d; ++a) {
    b0[a] = sj.b[a] - sk.b[a];
    v0[a] = sj.v[a] - sk.v[a];
  }
  double vv = dot(v0, v0);
  if (std::sqrt(vv) < v_min) throw LabError(ErrorKind::VelocitySeparation, "relative velocity below threshold");
  CollisionGeometry g;
  g.kappa = kappa;
  g.t0 = -dot(b0, v0) / vv;
  g.r0.resize(d);
  for (int a = 0; a < d; ++a) g.r0[a] = b0[a] + g.t0 * v0[a];
  double c = dot(g.r0, v0) / vv;
  for (int a = 0; a < d; ++a) g.r0[a] -= c * v0[a];
  g.r0_norm = norm(g.r0);
  g.min_distance = g.t0 > 0.0 ? g.r0_norm : norm(b0);
  if (g.t0 <= kappa * japanese(g.r0_norm)) {
    g.branch = 1;
    g.eps = 1.0 / (g.min_distance + std::sqrt(vv));
  } else {
    g.branch = 2;
    g.eps = 1.0 / std::sqrt(vv);
  }
  return g;
}

}  // namespace nlslab
