#include "nlslab/modulation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "nlslab/error.hpp"

namespace nlslab {

namespace {

// One soliton sampled on the grid together with its pairing data.
struct Frame {
  Field w;                    // w(x, sigma)
  Field phase;                // exp(-i Phi)
  std::vector<RealField> u;   // xi_l = u_l (1, type_l) in the soliton frame
  std::vector<int> type;
  std::vector<RealField> xt;  // unwrapped coordinates b + wrap(x - b)
};

Frame make_frame(const SolitonParams& s, const ProfileFamily& fam, const Grid& g) {
  const int d = g.d;
  if (!(s.E > 0.0) || !s.finite()) throw LabError(ErrorKind::DecompositionLost, "soliton parameters left the admissible set");
  const auto N = static_cast<Eigen::Index>(g.size());
  const GroundStateProfile& base = fam.base();
  const double sc = s.E / base.E, k = std::sqrt(sc);
  const double a_phi = std::pow(sc, 0.5 / base.p), a_dphi = a_phi * k, a_phiE = std::pow(sc, 0.5 / base.p - 1.0);
  Frame fr;
  fr.w.resize(N);
  fr.phase.resize(N);
  fr.u.assign(2 * d + 2, RealField(N));
  fr.type.assign(2 * d + 2, 1);
  fr.type[0] = -1;
  for (int a = 0; a < d; ++a) fr.type[d + 2 + a] = -1;
  fr.xt.assign(d, RealField(N));
  Vec bw(d);
  for (int a = 0; a < d; ++a) bw[a] = g.wrap(s.b[a]);
  // x - b and the frame phase jump where |x_a - b_a| = L/2; the functional profiles are tapered to
  // zero over a layer of width `layer` there so the residuals stay smooth in b.
  const double half = 0.5 * g.L, layer = std::min(2.0 / k, 0.125 * g.L);
  auto taper = [&](double ya) {
    double e = std::abs(ya) - (half - layer);
    if (e <= 0.0) return 1.0;
    double c = std::cos(0.5 * std::numbers::pi * std::min(e / layer, 1.0));
    return c * c;
  };
  std::vector<double> y(d);
  g.for_each([&](std::size_t idx, const double* x) {
    auto i = static_cast<Eigen::Index>(idx);
    double r2 = 0.0, vx = 0.0;
    for (int a = 0; a < d; ++a) {
      y[a] = g.wrap(x[a] - bw[a]);
      r2 += y[a] * y[a];
      fr.xt[a][i] = s.b[a] + y[a];
      vx += s.v[a] * fr.xt[a][i];
    }
    double tau = 1.0;
    for (int a = 0; a < d; ++a) tau *= taper(y[a]);
    double r = std::sqrt(r2), kr = k * r;
    double phi = a_phi * base.eval(kr);
    double dphi = a_dphi * base.eval_dphi(kr);
    double phiE = base.has_phi_E() ? a_phiE * base.eval_phi_E(kr) : 0.0;
    double Phi = s.beta + 0.5 * vx;
    fr.w[i] = std::polar(phi, Phi);
    fr.phase[i] = std::polar(1.0, -Phi);
    fr.u[0][i] = tau * phi;
    for (int a = 0; a < d; ++a) {
      fr.u[1 + a][i] = r > 0.0 ? tau * dphi * y[a] / r : 0.0;
      fr.u[d + 2 + a][i] = -0.5 * tau * y[a] * phi;
    }
    fr.u[d + 1][i] = -tau * phiE;
  });
  return fr;
}

// <(f, conj f) e^{-i sigma3 Phi}, sigma3 xi_l> with the imaginary unit of the (1,1) pairings dropped.
Eigen::VectorXd functionals(const Frame& fr, const Field& f, const Grid& g) {
  Field h = fr.phase * f;
  RealField re = h.real(), im = h.imag();
  Eigen::VectorXd out(static_cast<Eigen::Index>(fr.u.size()));
  for (std::size_t l = 0; l < fr.u.size(); ++l)
    out[static_cast<Eigen::Index>(l)] = 2.0 * g.dV() * (fr.type[l] < 0 ? (re * fr.u[l]).sum() : (im * fr.u[l]).sum());
  return out;
}

// d w / d sigma_m from frame data.
Field dw(const Frame& fr, int m, int d) {
  if (m == 0) return cplx(0.0, 1.0) * fr.w;
  if (m == 1) return -fr.phase.conjugate() * fr.u[d + 1].cast<cplx>();
  if (m < 2 + d) return -fr.phase.conjugate() * fr.u[1 + (m - 2)].cast<cplx>();
  int a = m - 2 - d;
  return cplx(0.0, 0.5) * fr.xt[a].cast<cplx>() * fr.w;
}

SolitonParams shifted(const SolitonParams& s, int m, double h) {
  SolitonParams out = s;
  const int d = s.dim();
  if (m == 0)
    out.beta += h;
  else if (m == 1)
    out.E += h;
  else if (m < 2 + d)
    out.b[m - 2] += h;
  else
    out.v[m - 2 - d] += h;
  return out;
}

struct System {
  const Grid& g;
  const ProfileFamily& fam;
  std::vector<SolitonParams> sigma;
  std::vector<Frame> frames;
  Field chi;
  Eigen::VectorXd R;

  System(const Grid& grid, const ProfileFamily& family, const Field& psi, std::vector<SolitonParams> s)
      : g(grid), fam(family), sigma(std::move(s)) {
    chi = psi;
    frames.reserve(sigma.size());
    for (const auto& sj : sigma) {
      frames.push_back(make_frame(sj, fam, g));
      chi -= frames.back().w;
    }
    R = residuals(chi, frames);
  }

  Eigen::VectorXd residuals(const Field& f, const std::vector<Frame>& fr) const {
    const int B = block_size(g.d);
    Eigen::VectorXd out(B * static_cast<Eigen::Index>(fr.size()));
    for (std::size_t j = 0; j < fr.size(); ++j) out.segment(B * static_cast<Eigen::Index>(j), B) = functionals(fr[j], f, g);
    return out;
  }

  double step_for(int m, const SolitonParams& s, double h) const { return m == 1 ? h * s.E : h; }

  // Central differences of the residual in sigma with psi held fixed.
  Eigen::MatrixXd jacobian(double h) const {
    const int B = block_size(g.d);
    const auto n = static_cast<Eigen::Index>(sigma.size()) * B;
    Eigen::MatrixXd J(n, n);
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      for (int m = 0; m < B; ++m) {
        double hm = step_for(m, sigma[j], h);
        Eigen::VectorXd Rp, Rm;
        for (int sgn : {1, -1}) {
          Frame f = make_frame(shifted(sigma[j], m, sgn * hm), fam, g);
          Field c = chi + frames[j].w - f.w;
          Eigen::VectorXd Rs(n);
          for (std::size_t k = 0; k < sigma.size(); ++k)
            Rs.segment(B * static_cast<Eigen::Index>(k), B) = functionals(k == j ? f : frames[k], c, g);
          (sgn > 0 ? Rp : Rm) = std::move(Rs);
        }
        J.col(B * static_cast<Eigen::Index>(j) + m) = (Rp - Rm) / (2.0 * hm);
      }
    }
    return J;
  }

  Eigen::MatrixXd diagonal_part() const {
    const int B = block_size(g.d);
    const auto n = static_cast<Eigen::Index>(sigma.size()) * B;
    Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      auto o = B * static_cast<Eigen::Index>(j);
      for (int m = 0; m < B; ++m) J0.block(o, o + m, B, 1) = -functionals(frames[j], dw(frames[j], m, g.d), g);
    }
    return J0;
  }
};

double cond_of(const Eigen::MatrixXd& J) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] == 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

}  // namespace

int block_size(int d) { return 2 * d + 2; }

Eigen::VectorXd pack(const std::vector<SolitonParams>& sigma) {
  if (sigma.empty()) return {};
  const int d = sigma.front().dim(), B = block_size(d);
  Eigen::VectorXd x(B * static_cast<Eigen::Index>(sigma.size()));
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    auto o = B * static_cast<Eigen::Index>(j);
    x[o] = sigma[j].beta;
    x[o + 1] = sigma[j].E;
    for (int a = 0; a < d; ++a) {
      x[o + 2 + a] = sigma[j].b[a];
      x[o + 2 + d + a] = sigma[j].v[a];
    }
  }
  return x;
}

std::vector<SolitonParams> unpack(const Eigen::VectorXd& x, int d) {
  const int B = block_size(d);
  require(x.size() % B == 0, "parameter vector size is not a multiple of 2d+2");
  std::vector<SolitonParams> out(static_cast<std::size_t>(x.size() / B));
  for (std::size_t j = 0; j < out.size(); ++j) {
    auto o = B * static_cast<Eigen::Index>(j);
    out[j].beta = x[o];
    out[j].E = x[o + 1];
    out[j].b.resize(d);
    out[j].v.resize(d);
    for (int a = 0; a < d; ++a) {
      out[j].b[a] = x[o + 2 + a];
      out[j].v[a] = x[o + 2 + d + a];
    }
  }
  return out;
}

Eigen::VectorXd orthogonality_residuals(const Grid& grid, const Field& psi, const std::vector<SolitonParams>& sigma,
                                        const ProfileFamily& family) {
  return System(grid, family, psi, sigma).R;
}

Decomposition modulation_project(const FieldState& psi, const std::vector<SolitonParams>& guess,
                                 const ProfileFamily& family, const DecompositionConfig& cfg,
                                 const NonlinearityModel* model) {
  const Grid& g = psi.grid;
  require(!guess.empty(), "decomposition needs at least one soliton");
  require(family.d() == g.d, "profile dimension mismatch");
  for (const auto& s : guess) require(s.dim() == g.d && static_cast<int>(s.v.size()) == g.d, "soliton dimension mismatch");
  require(!cfg.rates || model != nullptr, "rate assembly needs the nonlinearity model");
  const double thr = cfg.tol * norm2(g, psi.values);

  std::optional<System> opt(std::in_place, g, family, psi.values, guess);
  int it = 0;
  while (opt->R.cwiseAbs().maxCoeff() >= thr) {
    System& sys = *opt;
    if (it == cfg.max_iters) throw LabError(ErrorKind::DecompositionLost, "Newton iteration did not converge");
    Eigen::MatrixXd J = sys.jacobian(cfg.fd_step);
    if (!(cond_of(J) < 1e9)) throw LabError(ErrorKind::DegenerateConfiguration, "singular decomposition Jacobian");
    Eigen::VectorXd dx = J.fullPivLu().solve(-sys.R);
    Eigen::VectorXd x = pack(sys.sigma) + dx;
    opt.emplace(g, family, psi.values, unpack(x, g.d));
    ++it;
  }
  System& sys = *opt;

  Decomposition out;
  out.iters = it;
  out.residual = sys.R.cwiseAbs().maxCoeff();
  if (cfg.rates) {
    out.J = sys.jacobian(cfg.fd_step);
    out.J0 = sys.diagonal_part();
    Fft fft(g);
    Field psit = neg_laplacian(fft, psi.values);
    for (Eigen::Index i = 0; i < psit.size(); ++i) psit[i] += model->F(std::norm(psi.values[i])) * psi.values[i];
    psit *= cplx(0.0, -1.0);
    out.rhs = sys.residuals(psit, sys.frames);
  }
  out.sigma = std::move(sys.sigma);
  out.chi = std::move(sys.chi);
  return out;
}

JacobianIdentity jacobian_identity_check(double E, const ProfileFamily& family, const Grid& grid, double h) {
  SolitonParams s0 = SolitonParams::at_rest(grid.d, E);
  Field psi = soliton_state(s0, family, grid);
  System sys(grid, family, psi, {s0});
  Eigen::MatrixXd J = sys.jacobian(h);
  MassNorms mn = family.norms(E);
  JacobianIdentity out;
  out.fd_det = std::abs(J.determinant());
  out.formula = mn.e * mn.e * std::pow(mn.n, 2 * grid.d);
  out.rel_err = std::abs(out.fd_det - out.formula) / out.formula;
  return out;
}

double majorant_M1(const Grid& grid, const Field& chi, const std::vector<SolitonParams>& sigma, double nu) {
  double total = 0.0;
  RealField a2 = chi.abs2();
  for (const auto& s : sigma) {
    double acc = 0.0;
    grid.for_each([&](std::size_t idx, const double* x) {
      double r2 = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        double y = grid.wrap(x[a] - s.b[a]);
        r2 += y * y;
      }
      acc += std::pow(1.0 + r2, -nu) * a2[static_cast<Eigen::Index>(idx)];
    });
    total += std::sqrt(acc * grid.dV());
  }
  return total;
}

double majorant_M2(const Grid& grid, const Field& chi, double m) { return norm_p(grid, chi, m); }

double majorant_M0(const std::vector<ModulationCoordinates>& coords, const std::vector<SolitonParams>& sigma0) {
  require(coords.size() == sigma0.size(), "soliton count mismatch");
  double M = 0.0;
  for (std::size_t j = 0; j < coords.size(); ++j) {
    Vec dc(coords[j].c.size()), dv(coords[j].v.size());
    for (std::size_t a = 0; a < dc.size(); ++a) {
      dc[a] = coords[j].c[a] - sigma0[j].b[a];
      dv[a] = coords[j].v[a] - sigma0[j].v[a];
    }
    M += std::abs(coords[j].gamma - sigma0[j].beta) + std::abs(coords[j].E - sigma0[j].E) + norm(dc) + norm(dv);
  }
  return M;
}

std::vector<Eigen::VectorXd> sigma_rates(const std::vector<DecompositionRecord>& series) {
  require(series.size() >= 3, "rates need at least three records");
  const double dt = series[1].t - series[0].t;
  require(dt > 0.0, "record times must increase");
  for (std::size_t i = 1; i < series.size(); ++i)
    require(std::abs(series[i].t - series[i - 1].t - dt) <= 1e-9 * dt, "non-uniform record spacing");
  std::vector<Eigen::VectorXd> x(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) x[i] = pack(series[i].sigma);
  const std::size_t n = x.size();
  std::vector<Eigen::VectorXd> out(n);
  out[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
  out[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
  return out;
}

Eigen::VectorXd to_modulation_rates(const Eigen::VectorXd& sd, const std::vector<SolitonParams>& sigma) {
  const int d = sigma.front().dim(), B = block_size(d);
  Eigen::VectorXd out = sd;
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    auto o = B * static_cast<Eigen::Index>(j);
    const auto& s = sigma[j];
    double vdot_b = 0.0;
    for (int a = 0; a < d; ++a) {
      vdot_b += sd[o + 2 + d + a] * s.b[a];
      out[o + 2 + a] = sd[o + 2 + a] - s.v[a];
    }
    out[o] = sd[o] - s.E + 0.25 * dot(s.v, s.v) + 0.5 * vdot_b;
  }
  return out;
}

std::vector<std::vector<ModulationCoordinates>> reconstruct_coordinates(
    const std::vector<DecompositionRecord>& series) {
  std::vector<std::vector<ModulationCoordinates>> out(series.size());
  if (series.empty()) return out;
  const std::size_t N = series.front().sigma.size();
  const int d = N ? series.front().sigma.front().dim() : 0;
  std::vector<Eigen::VectorXd> rates;
  if (series.size() >= 3) rates = sigma_rates(series);
  auto integrand = [&](std::size_t i, std::size_t j) {
    const auto& s = series[i].sigma[j];
    double vb = 0.0;
    if (!rates.empty()) {
      auto o = block_size(d) * static_cast<Eigen::Index>(j);
      for (int a = 0; a < d; ++a) vb += rates[i][o + 2 + d + a] * s.b[a];
    }
    return s.E - 0.25 * dot(s.v, s.v) - 0.5 * vb;
  };
  std::vector<double> Ib(N, 0.0);
  std::vector<Vec> Iv(N, Vec(d, 0.0));
  for (std::size_t i = 0; i < series.size(); ++i) {
    require(series[i].sigma.size() == N, "soliton count changes along the series");
    if (i > 0) {
      double h = series[i].t - series[i - 1].t;
      for (std::size_t j = 0; j < N; ++j) {
        Ib[j] += 0.5 * h * (integrand(i, j) + integrand(i - 1, j));
        for (int a = 0; a < d; ++a) Iv[j][a] += 0.5 * h * (series[i].sigma[j].v[a] + series[i - 1].sigma[j].v[a]);
      }
    }
    out[i].resize(N);
    for (std::size_t j = 0; j < N; ++j) {
      const auto& s = series[i].sigma[j];
      auto& c = out[i][j];
      c.gamma = s.beta - Ib[j];
      c.E = s.E;
      c.v = s.v;
      c.c.resize(d);
      for (int a = 0; a < d; ++a) c.c[a] = s.b[a] - Iv[j][a];
    }
  }
  return out;
}

double weight_rho(double t, const std::vector<double>& collision_times) {
  double r = 1.0 / japanese(t);
  for (double tc : collision_times) r += 1.0 / japanese(t - tc);
  return r;
}

std::vector<double> collision_times(const std::vector<DecompositionRecord>& series,
                                    const std::vector<SolitonParams>& sigma0) {
  std::vector<double> out;
  const std::size_t N = sigma0.size();
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < N; ++k) {
      if (j == k) continue;
      CollisionGeometry geo = collision_geometry(sigma0[j], sigma0[k]);
      if (geo.t0 <= 0.0) {
        out.push_back(0.0);
        continue;
      }
      const int d = sigma0[j].dim();
      Vec v0(d);
      for (int a = 0; a < d; ++a) v0[a] = sigma0[j].v[a] - sigma0[k].v[a];
      const double vv = dot(v0, v0);
      auto rate = [&](std::size_t i) {
        Vec vjk(d);
        for (int a = 0; a < d; ++a) vjk[a] = series[i].sigma[j].v[a] - series[i].sigma[k].v[a];
        return dot(vjk, v0) / vv;
      };
      double acc = 0.0, t = 0.0, g = 1.0;
      bool found = false;
      for (std::size_t i = 0; i < series.size(); ++i) {
        double gi = rate(i);
        if (i > 0) {
          double h = series[i].t - series[i - 1].t, gp = rate(i - 1);
          double step = 0.5 * h * (gi + gp);
          if (acc + step >= geo.t0) {
            // Linear rate within the interval: solve the quadratic for the crossing.
            double a2 = 0.5 * (gi - gp) / h, a1 = gp, c0 = acc - geo.t0;
            double s = std::abs(a2) < 1e-14 ? -c0 / a1 : (-a1 + std::sqrt(a1 * a1 - 4 * a2 * c0)) / (2 * a2);
            out.push_back(series[i - 1].t + s);
            found = true;
            break;
          }
          acc += step;
        }
        t = series[i].t;
        g = gi;
      }
      if (!found) {
        require(g > 0.0, "relative velocity reversed; collision time undefined");
        out.push_back(series.empty() ? geo.t0 : t + (geo.t0 - acc) / g);
      }
    }
  }
  return out;
}

RateSeries modulation_rates(const std::vector<DecompositionRecord>& series) {
  RateSeries out;
  std::vector<Eigen::VectorXd> sd = sigma_rates(series);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& rec = series[i];
    out.t.push_back(rec.t);
    out.fd.push_back(to_modulation_rates(sd[i], rec.sigma));
    if (rec.J.size() == 0 || rec.rhs.size() == 0) {
      out.sweep.emplace_back();
      out.solve.emplace_back();
      out.discrepancy.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    Eigen::VectorXd sweep = rec.J0.fullPivLu().solve(-rec.rhs - (rec.J - rec.J0) * sd[i]);
    Eigen::VectorXd solve = rec.J.fullPivLu().solve(-rec.rhs);
    out.sweep.push_back(to_modulation_rates(sweep, rec.sigma));
    out.solve.push_back(to_modulation_rates(solve, rec.sigma));
    out.discrepancy.push_back((out.sweep.back() - out.fd.back()).cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace nlslab
