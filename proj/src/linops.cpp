#include "nlslab/linops.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "nlslab/error.hpp"

namespace nlslab {

TwoComponentField TwoComponentField::zero(const Grid& g) {
  auto n = static_cast<Eigen::Index>(g.size());
  return {Field::Zero(n), Field::Zero(n)};
}

TwoComponentField TwoComponentField::from_scalar(const Field& f) { return {f, f.conjugate()}; }

TwoComponentField& TwoComponentField::operator+=(const TwoComponentField& o) {
  upper += o.upper;
  lower += o.lower;
  return *this;
}

TwoComponentField& TwoComponentField::operator-=(const TwoComponentField& o) {
  upper -= o.upper;
  lower -= o.lower;
  return *this;
}

TwoComponentField TwoComponentField::operator+(const TwoComponentField& o) const {
  TwoComponentField r = *this;
  return r += o;
}

TwoComponentField TwoComponentField::operator-(const TwoComponentField& o) const {
  TwoComponentField r = *this;
  return r -= o;
}

TwoComponentField TwoComponentField::operator*(cplx c) const { return {upper * c, lower * c}; }

double TwoComponentField::conjugate_defect() const { return (lower - upper.conjugate()).abs().maxCoeff(); }

cplx inner(const Grid& g, const TwoComponentField& f, const TwoComponentField& h) {
  return inner(g, f.upper, h.upper) + inner(g, f.lower, h.lower);
}

double norm2(const Grid& g, const TwoComponentField& f) {
  return std::sqrt((f.upper.abs2().sum() + f.lower.abs2().sum()) * g.dV());
}

LinearizedOperator::LinearizedOperator(const Grid& grid, double E)
    : model_(1.0), E_(E), grid_(grid), fft_(std::make_shared<Fft>(grid)) {
  require(E > 0.0, "E must be positive");
}

LinearizedOperator::LinearizedOperator(const NonlinearityModel& model, const ProfileFamily& family, double E,
                                       const Grid& grid)
    : LinearizedOperator(grid, E) {
  require(family.d() == grid.d, "profile dimension does not match grid");
  require(std::abs(family.p() - model.p()) < 1e-15, "profile and model exponents differ");
  model_ = model;
  family_ = &family;
  auto n = static_cast<Eigen::Index>(grid.size());
  V1_.resize(n);
  V2_.resize(n);
  grid.for_each([&](std::size_t idx, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.d; ++a) r2 += x[a] * x[a];
    double r = std::sqrt(r2);
    V1_[static_cast<Eigen::Index>(idx)] = V1_at(r);
    V2_[static_cast<Eigen::Index>(idx)] = V2_at(r);
  });
}

LinearizedOperator LinearizedOperator::free(double E, const Grid& grid, int) {
  LinearizedOperator op(grid, E);
  auto n = static_cast<Eigen::Index>(grid.size());
  op.V1_ = RealField::Zero(n);
  op.V2_ = RealField::Zero(n);
  return op;
}

const ProfileFamily& LinearizedOperator::family() const {
  require(family_ != nullptr, "free operator has no profile");
  return *family_;
}

double LinearizedOperator::V1_at(double r) const {
  if (!family_) return 0.0;
  double s = family_->phi(r, E_);
  s *= s;
  return model_.F(s) + model_.dF(s) * s;
}

double LinearizedOperator::V2_at(double r) const {
  if (!family_) return 0.0;
  double s = family_->phi(r, E_);
  s *= s;
  return s == 0.0 ? 0.0 : model_.dF(s) * s;
}

TwoComponentField apply_L(const LinearizedOperator& op, const TwoComponentField& f) {
  const Grid& g = op.grid();
  require(static_cast<std::size_t>(f.upper.size()) == g.size() && f.lower.size() == f.upper.size(),
          "field does not match operator grid");
  Field a = neg_laplacian(op.fft(), f.upper);
  Field b = neg_laplacian(op.fft(), f.lower);
  const double E = op.E();
  const auto& V1 = op.V1();
  const auto& V2 = op.V2();
  TwoComponentField out;
  out.upper = a + (E + V1) * f.upper + V2 * f.lower;
  out.lower = -b - (E + V1) * f.lower - V2 * f.upper;
  return out;
}

SymmetryResiduals symmetry_checks(const LinearizedOperator& op, const TwoComponentField& f,
                                  const TwoComponentField& g) {
  const Grid& gr = op.grid();
  TwoComponentField Lf = apply_L(op, f);
  TwoComponentField Lg = apply_L(op, g);
  TwoComponentField s3Ls3f = apply_L(op, f.sigma3()).sigma3();
  double scale = norm2(gr, Lf) * norm2(gr, g) + norm2(gr, f) * norm2(gr, Lg);
  SymmetryResiduals r;
  r.adjoint = scale > 0.0 ? std::abs(inner(gr, s3Ls3f, g) - inner(gr, f, Lg)) / scale : 0.0;
  TwoComponentField s1Ls1f = apply_L(op, f.sigma1()).sigma1();
  double nLf = norm2(gr, Lf);
  r.swap = nLf > 0.0 ? norm2(gr, s1Ls1f + Lf) / nLf : 0.0;
  return r;
}

TwoComponentField NullBasis::xi(std::size_t i) const {
  if (i >= u.size()) return extra.at(i - u.size());
  Field c = u[i].cast<cplx>();
  return {c, static_cast<double>(type[i]) * c};
}

cplx NullBasis::pair_sigma3(const TwoComponentField& f, std::size_t k) const {
  if (k >= u.size()) return inner(grid, f, extra.at(k - u.size()).sigma3());
  const RealField& w = u[k];
  const double s = type[k];
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += (f.upper[i] - s * f.lower[i]) * w[i];
  return acc * grid.dV();
}

namespace {

void rebuild_gram(NullBasis& b) {
  const std::size_t m = b.size();
  b.gram.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    TwoComponentField xi = b.xi(i);
    for (std::size_t k = 0; k < m; ++k) b.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = b.pair_sigma3(xi, k);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(b.gram);
  const auto& sv = svd.singularValues();
  b.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(b.condition <= 1e8)) throw LabError(ErrorKind::DegenerateBasis, "gram condition number exceeds 1e8");
}

}  // namespace

NullBasis build_null_basis(const LinearizedOperator& op) {
  const Grid& g = op.grid();
  const ProfileFamily& fam = op.family();
  const int d = g.d;
  const double E = op.E();
  NullBasis b;
  b.grid = g;
  b.d = d;
  auto n = static_cast<Eigen::Index>(g.size());
  b.u.assign(2 * d + 2, RealField(n));
  b.type.assign(2 * d + 2, 1);
  b.type[0] = -1;
  for (int j = 1; j <= d; ++j) b.type[d + 1 + j] = -1;
  g.for_each([&](std::size_t idx, const double* x) {
    auto i = static_cast<Eigen::Index>(idx);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
    double r = std::sqrt(r2);
    double phi = fam.phi(r, E);
    double dphi = fam.dphi(r, E);
    b.u[0][i] = phi;
    for (int j = 1; j <= d; ++j) {
      b.u[j][i] = r > 0.0 ? dphi * x[j - 1] / r : 0.0;
      b.u[d + 1 + j][i] = -0.5 * x[j - 1] * phi;
    }
    b.u[d + 1][i] = -fam.phi_E(r, E);
  });
  MassNorms nm = fam.norms(E);
  b.e = nm.e;
  b.n = nm.n;
  rebuild_gram(b);
  return b;
}

void extend_basis(NullBasis& basis, const std::vector<TwoComponentField>& modes) {
  for (const auto& m : modes) basis.extra.push_back(m);
  rebuild_gram(basis);
}

Eigen::VectorXcd projection_coefficients(const NullBasis& basis, const TwoComponentField& f) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXcd rhs(m);
  for (Eigen::Index k = 0; k < m; ++k) rhs(k) = basis.pair_sigma3(f, static_cast<std::size_t>(k));
  return basis.gram.transpose().fullPivLu().solve(rhs);
}

TwoComponentField project_continuous(const NullBasis& basis, const TwoComponentField& f) {
  require(static_cast<std::size_t>(f.upper.size()) == basis.grid.size(), "field does not match basis grid");
  if (!(basis.condition <= 1e8)) throw LabError(ErrorKind::DegenerateBasis, "singular gram");
  Eigen::VectorXcd c = projection_coefficients(basis, f);
  TwoComponentField out = f;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    cplx ci = c(static_cast<Eigen::Index>(i));
    if (i < basis.u.size()) {
      Field xi = basis.u[i].cast<cplx>() * ci;
      out.upper -= xi;
      out.lower -= static_cast<double>(basis.type[i]) * xi;
    } else {
      out -= basis.extra[i - basis.u.size()] * ci;
    }
  }
  return out;
}

Eigen::Matrix2cd potential_propagator(double V1, double V2, double t) {
  // W^2 = (V1^2 - V2^2) I, so exp(-i t W) = c(t) I - i s(t) W.
  double w2 = V1 * V1 - V2 * V2;
  double c, s;
  double z = w2 * t * t;
  if (std::abs(z) < 1e-8) {
    c = 1.0 - z / 2.0 + z * z / 24.0;
    s = t * (1.0 - z / 6.0 + z * z / 120.0);
  } else if (w2 > 0.0) {
    double w = std::sqrt(w2);
    c = std::cos(w * t);
    s = std::sin(w * t) / w;
  } else {
    double mu = std::sqrt(-w2);
    c = std::cosh(mu * t);
    s = std::sinh(mu * t) / mu;
  }
  const cplx I(0.0, 1.0);
  Eigen::Matrix2cd P;
  P << c - I * s * V1, -I * s * V2, I * s * V2, c + I * s * V1;
  return P;
}

double weighted_norm(const Grid& g, const TwoComponentField& f, double nu, const Vec& center) {
  double acc = 0.0;
  g.for_each([&](std::size_t idx, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) {
      double y = center.empty() ? x[a] : g.wrap(x[a] - center[a]);
      r2 += y * y;
    }
    auto i = static_cast<Eigen::Index>(idx);
    double w = std::pow(1.0 + r2, -nu);
    acc += w * (std::norm(f.upper[i]) + std::norm(f.lower[i]));
  });
  return std::sqrt(acc * g.dV());
}

LinearizedTrajectory evolve_linearized(const LinearizedOperator& op, const TwoComponentField& f0, double T,
                                       double dt, const EvolveOptions& opts) {
  const Grid& g = op.grid();
  require(dt > 0.0 && T >= 0.0, "time step must be positive");
  require(dt * (g.k_max() * g.k_max() * g.d + op.E()) <= 4.0 * std::acos(-1.0),
          "time step does not resolve the largest wavenumber");
  const double nu0 = opts.nu0 > 0.0 ? opts.nu0 : g.d / 2.0 + 1.0;
  const auto n = static_cast<Eigen::Index>(g.size());

  // Half-step Fourier multipliers for the upper and lower components.
  Field half_u(n), half_l(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double w = g.ksq()[i] + op.E();
    half_u[i] = std::polar(1.0, -0.5 * dt * w);
    half_l[i] = std::polar(1.0, 0.5 * dt * w);
  }
  Field P00(n), P01(n), P10(n), P11(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Matrix2cd P = potential_propagator(op.V1()[i], op.V2()[i], dt);
    P00[i] = P(0, 0);
    P01[i] = P(0, 1);
    P10[i] = P(1, 0);
    P11[i] = P(1, 1);
  }

  LinearizedTrajectory out;
  TwoComponentField f = f0;
  double ref = opts.projector ? norm2(g, project_continuous(*opts.projector, f0)) : 0.0;
  auto record = [&](double t) {
    out.t.push_back(t);
    out.weighted_norm.push_back(weighted_norm(g, f, nu0, opts.center));
    out.l2_norm.push_back(norm2(g, f));
    if (opts.projector && ref > 0.0) {
      double now = norm2(g, project_continuous(*opts.projector, f));
      if (!(now <= 10.0 * ref)) throw LabError(ErrorKind::NumericalFailure, "linearized flow grew tenfold in the projected sector");
    }
    if (!std::isfinite(out.l2_norm.back())) throw LabError(ErrorKind::NumericalFailure, "linearized flow is not finite");
  };
  long steps = std::lround(T / dt);
  record(0.0);
  const Fft& fft = op.fft();
  fft.forward(f.upper);
  fft.forward(f.lower);
  for (long s = 1; s <= steps; ++s) {
    f.upper *= half_u;
    f.lower *= half_l;
    fft.backward(f.upper);
    fft.backward(f.lower);
    Field a = P00 * f.upper + P01 * f.lower;
    f.lower = P10 * f.upper + P11 * f.lower;
    f.upper = std::move(a);
    fft.forward(f.upper);
    fft.forward(f.lower);
    f.upper *= half_u;
    f.lower *= half_l;
    if (s % opts.sample_every == 0 || s == steps) {
      TwoComponentField x = f;
      fft.backward(x.upper);
      fft.backward(x.lower);
      std::swap(f, x);
      record(s * dt);
      std::swap(f, x);
    }
  }
  fft.backward(f.upper);
  fft.backward(f.lower);
  out.final = std::move(f);
  return out;
}

}  // namespace nlslab
