#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "nlslab/error.hpp"
#include "nlslab/linops.hpp"

namespace nlslab {

namespace {

long binom(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Number of independent spherical harmonics of degree n in d dimensions.
int harmonic_degeneracy(int d, int n) {
  if (d == 1) return n <= 1 ? 1 : 0;
  return static_cast<int>(binom(n + d - 1, d - 1) - binom(n + d - 3, d - 1));
}

// Sector operator on u = r^{(d-1)/2} f, 4th-order differences, Dirichlet at R.
struct SectorMatrix {
  Eigen::MatrixXd M;
  std::vector<double> r;  // radii of the unknowns
  int i0 = 1;
  int parity = -1;
};

SectorMatrix sector_matrix(const LinearizedOperator& op, int d, int sector, int N, double R) {
  const double h = R / N;
  const double c = (d - 1) * (d - 3) / 4.0 + sector * (sector + d - 2.0);
  SectorMatrix S;
  S.parity = ((sector + (d - 1) / 2) % 2 == 0) ? 1 : -1;
  S.i0 = (d == 1 && S.parity == 1) ? 0 : 1;
  const int m = N - S.i0;  // unknowns i0..N-1
  S.r.resize(m);
  for (int j = 0; j < m; ++j) S.r[j] = (j + S.i0) * h;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  const double w[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  for (int j = 0; j < m; ++j) {
    int i = j + S.i0;
    for (int o = -2; o <= 2; ++o) {
      int k = i + o;
      double sgn = 1.0;
      if (k >= N) {
        if (k == N) continue;
        k = 2 * N - k;
        sgn = -1.0;
      }
      if (k < 0) {
        k = -k;
        sgn = S.parity;
      }
      if (k < S.i0) continue;
      H(j, k - S.i0) += -sgn * w[o + 2] / (12.0 * h * h);
    }
    double r = S.r[j];
    double pot = op.E() + op.V1_at(r) + (r > 0.0 ? c / (r * r) : 0.0);
    H(j, j) += pot;
  }
  S.M.resize(2 * m, 2 * m);
  Eigen::MatrixXd V2 = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) V2(j, j) = op.V2_at(S.r[j]);
  S.M << H, V2, -V2, -H;
  return S;
}

// In the variables s = a + b, q = a - b the sector operator acts as (s, q) -> (L- q, L+ s),
// so its eigenvalues are the square roots of those of L- L+.
std::vector<cplx> sector_eigenvalues(const LinearizedOperator& op, int d, int sector, int N, double R) {
  SectorMatrix S = sector_matrix(op, d, sector, N, R);
  const Eigen::Index m = S.M.rows() / 2;
  Eigen::MatrixXd H = S.M.topLeftCorner(m, m);
  Eigen::MatrixXd V2 = S.M.topRightCorner(m, m);
  Eigen::MatrixXd prod = (H - V2) * (H + V2);
  Eigen::EigenSolver<Eigen::MatrixXd> es(prod, false);
  if (es.info() != Eigen::Success) throw LabError(ErrorKind::NumericalFailure, "sector eigen-solve failed");
  std::vector<cplx> ev;
  ev.reserve(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    cplx root = std::sqrt(cplx(es.eigenvalues()(i)));
    ev.push_back(root);
    ev.push_back(-root);
  }
  return ev;
}

bool in_gap(cplx z, double E, double zero_r) {
  if (std::abs(z) < zero_r) return false;
  return std::abs(z.imag()) > 1e-6 * E || std::abs(z.real()) < E * (1.0 - 1e-3);
}

}  // namespace

SpectrumReport point_spectrum_scan(const LinearizedOperator& op, int sector_count, const SpectrumOptions& opts) {
  const int d = op.grid().d;
  const double E = op.E();
  require(sector_count >= 0, "sector count must be nonnegative");
  require(opts.n_coarse >= 50, "radial resolution too small");
  if (d == 1) sector_count = std::min(sector_count, 1);
  SpectrumReport rep;
  rep.R = opts.R > 0.0 ? opts.R : 30.0 / std::sqrt(E);
  rep.n_coarse = opts.n_coarse;
  rep.n_fine = 2 * opts.n_coarse;
  rep.zero_cluster_radius = opts.zero_tol * E;
  for (int s = 0; s <= sector_count; ++s) {
    SectorEigen se;
    se.sector = s;
    se.degeneracy = harmonic_degeneracy(d, s);
    se.coarse = sector_eigenvalues(op, d, s, rep.n_coarse, rep.R);
    se.fine = sector_eigenvalues(op, d, s, rep.n_fine, rep.R);
    int zeros = 0;
    for (cplx z : se.fine)
      if (std::abs(z) < rep.zero_cluster_radius) ++zeros;
    rep.zero_count_per_sector.push_back(zeros);
    rep.zero_multiplicity += zeros * se.degeneracy;
    for (cplx z : se.fine) {
      if (!in_gap(z, E, rep.zero_cluster_radius)) continue;
      double drift = INFINITY;
      for (cplx y : se.coarse) drift = std::min(drift, std::abs(y - z));
      rep.gap_eigenvalues.push_back(z);
      rep.gap_sectors.push_back(s);
      rep.gap_drift.push_back(drift);
      rep.max_drift = std::max(rep.max_drift, drift);
    }
    rep.sectors.push_back(std::move(se));
  }
  if (opts.throw_on_drift && rep.max_drift > opts.drift_tol)
    throw LabError(ErrorKind::UnresolvedSpectrum, "gap eigenvalue drifts between resolutions");
  return rep;
}

RadialMode radial_mode(const LinearizedOperator& op, int sector, cplx target, int N, double R) {
  const int d = op.grid().d;
  SectorMatrix S = sector_matrix(op, d, sector, N, R);
  const Eigen::Index m2 = S.M.rows();
  Eigen::MatrixXcd A = S.M.cast<cplx>();
  A.diagonal().array() -= target;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(m2);
  cplx lambda = target;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXcd y = lu.solve(x);
    y /= y.norm();
    Eigen::VectorXcd My = S.M.cast<cplx>() * y;
    cplx l = y.dot(My);  // Rayleigh quotient (y normalized)
    double change = (y - x * (x.dot(y) / std::abs(x.dot(y)))).norm();
    x = y;
    lambda = l;
    if (it > 2 && change < 1e-12) break;
  }
  RadialMode out;
  out.lambda = lambda;
  out.r = S.r;
  const Eigen::Index m = m2 / 2;
  out.a = x.head(m);
  out.b = x.tail(m);
  // Fix the global phase so that the largest entry of a is real and positive.
  Eigen::Index imax = 0;
  out.a.cwiseAbs().maxCoeff(&imax);
  cplx ph = std::abs(out.a(imax)) > 0 ? std::conj(out.a(imax)) / std::abs(out.a(imax)) : 1.0;
  out.a *= ph;
  out.b *= ph;
  return out;
}

TwoComponentField sample_radial_mode(const RadialMode& mode, const Grid& grid, int d) {
  require(!mode.r.empty(), "empty radial mode");
  const double h = mode.r.size() > 1 ? mode.r[1] - mode.r[0] : mode.r[0];
  const double r0 = mode.r[0];
  const auto m = static_cast<long>(mode.r.size());
  // f = u / r^{(d-1)/2}; u is interpolated by cubic Lagrange using the n = 0 parity ghosts.
  const double parity = ((d - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
  auto u_at = [&](const Eigen::VectorXcd& u, long i) -> cplx {
    long idx = i;
    double sgn = 1.0;
    if (idx < 0) {
      idx = -idx;
      sgn = parity;
    }
    long k = idx - static_cast<long>(std::lround(r0 / h));
    if (k < 0 || k >= m) return 0.0;
    return sgn * u(k);
  };
  auto interp = [&](const Eigen::VectorXcd& u, double r) -> cplx {
    double x = r / h;
    long i = static_cast<long>(std::floor(x));
    double s = x - i;
    cplx p0 = u_at(u, i - 1), p1 = u_at(u, i), p2 = u_at(u, i + 1), p3 = u_at(u, i + 2);
    return p0 * (-s * (s - 1) * (s - 2) / 6.0) + p1 * ((s + 1) * (s - 1) * (s - 2) / 2.0) +
           p2 * (-(s + 1) * s * (s - 2) / 2.0) + p3 * ((s + 1) * s * (s - 1) / 6.0);
  };
  TwoComponentField out = TwoComponentField::zero(grid);
  const double pw = (d - 1) / 2.0;
  grid.for_each([&](std::size_t idx, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
    double r = std::sqrt(r2);
    double rr = std::max(r, 0.5 * h);
    double scale = pw > 0.0 ? std::pow(rr, -pw) : 1.0;
    auto i = static_cast<Eigen::Index>(idx);
    out.upper[i] = interp(mode.a, rr) * scale;
    out.lower[i] = interp(mode.b, rr) * scale;
  });
  return out;
}

}  // namespace nlslab
