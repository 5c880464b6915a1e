#include "nlslab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "nlslab/error.hpp"

namespace nlslab {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Grid::Grid(int d_, int n_, double L_) : d(d_), n(n_), L(L_) {
  require(d >= 1 && d <= 3, "grid dimension must be 1, 2 or 3");
  require(n >= 4 && (n & (n - 1)) == 0, "grid size must be a power of two");
  require(L > 0.0 && std::isfinite(L), "box length must be positive");
  total_ = 1;
  for (int a = 0; a < d; ++a) total_ *= static_cast<std::size_t>(n);
  ksq_.resize(static_cast<Eigen::Index>(total_));
  std::vector<double> k2(n);
  for (int i = 0; i < n; ++i) k2[i] = wavenumber(i) * wavenumber(i);
  std::vector<int> ix(d);
  for (std::size_t idx = 0; idx < total_; ++idx) {
    unflatten(idx, ix.data());
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += k2[ix[a]];
    ksq_[static_cast<Eigen::Index>(idx)] = s;
  }
}

double Grid::wavenumber(int i) const {
  int m = i < n / 2 ? i : i - n;
  return 2.0 * std::numbers::pi * m / L;
}

double Grid::k_max() const { return std::numbers::pi * n / L; }

void Grid::unflatten(std::size_t idx, int* out) const {
  for (int a = d - 1; a >= 0; --a) {
    out[a] = static_cast<int>(idx % n);
    idx /= n;
  }
}

double Grid::wrap(double x) const { return x - L * std::floor(x / L + 0.5); }

void set_fft_threads(int n) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  static bool init = false;
  if (!init) {
    fftw_init_threads();
    init = true;
  }
  fftw_plan_with_nthreads(std::max(1, n));
}

Fft::Fft(const Grid& grid) : grid_(grid) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  std::vector<int> dims(grid.d, grid.n);
  Field tmp(static_cast<Eigen::Index>(grid.size()));
  auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fwd_ = fftw_plan_dft(grid.d, dims.data(), p, p, FFTW_FORWARD, flags);
  bwd_ = fftw_plan_dft(grid.d, dims.data(), p, p, FFTW_BACKWARD, flags);
  if (!fwd_ || !bwd_) throw LabError(ErrorKind::NumericalFailure, "FFTW planning failed");
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft::forward(Field& f) const {
  require(static_cast<std::size_t>(f.size()) == grid_.size(), "field size does not match FFT grid");
  auto* p = reinterpret_cast<fftw_complex*>(f.data());
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), p, p);
}

void Fft::backward(Field& f) const {
  require(static_cast<std::size_t>(f.size()) == grid_.size(), "field size does not match FFT grid");
  auto* p = reinterpret_cast<fftw_complex*>(f.data());
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), p, p);
  f /= static_cast<double>(grid_.size());
}

cplx inner(const Grid& g, const Field& f, const Field& h) {
  require(f.size() == h.size(), "inner product size mismatch");
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += f[i] * std::conj(h[i]);
  return s * g.dV();
}

double norm2(const Grid& g, const Field& f) { return std::sqrt(f.abs2().sum() * g.dV()); }

double norm_p(const Grid& g, const Field& f, double p) {
  return std::pow(f.abs().pow(p).sum() * g.dV(), 1.0 / p);
}

Field neg_laplacian(const Fft& fft, const Field& f) {
  Field out = f;
  fft.forward(out);
  out *= fft.grid().ksq().cast<cplx>();
  fft.backward(out);
  return out;
}

Field translate(const Fft& fft, const Field& f, const Vec& shift) {
  const Grid& g = fft.grid();
  require(static_cast<int>(shift.size()) == g.d, "shift dimension mismatch");
  Field out = f;
  fft.forward(out);
  std::vector<int> ix(g.d);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    g.unflatten(idx, ix.data());
    double phase = 0.0, amp = 1.0;
    for (int a = 0; a < g.d; ++a) {
      // Nyquist modes use the real (cosine) factor so real fields stay real.
      if (ix[a] == g.n / 2) amp *= std::cos(g.wavenumber(ix[a]) * shift[a]);
      else phase -= g.wavenumber(ix[a]) * shift[a];
    }
    out[static_cast<Eigen::Index>(idx)] *= amp * std::polar(1.0, phase);
  }
  fft.backward(out);
  return out;
}

}  // namespace nlslab
