#ifndef NLSLAB_GRID_HPP
#define NLSLAB_GRID_HPP

#include <Eigen/Core>
#include <complex>
#include <memory>
#include <vector>

namespace nlslab {

using cplx = std::complex<double>;
using Field = Eigen::ArrayXcd;
using RealField = Eigen::ArrayXd;
using Vec = std::vector<double>;

// Uniform periodic grid with n points per axis on [-L/2, L/2)^d, row-major.
struct Grid {
  int d = 1;
  int n = 0;
  double L = 0.0;

  Grid() = default;
  Grid(int d_, int n_, double L_);

  std::size_t size() const { return total_; }
  double dx() const { return L / n; }
  double dV() const { return std::pow(dx(), d); }
  double coord(int i) const { return -0.5 * L + i * dx(); }
  // Wavenumber of index i along one axis.
  double wavenumber(int i) const;
  double k_max() const;
  // Per-axis index of the flat index.
  void unflatten(std::size_t idx, int* out) const;
  // Wraps a displacement into [-L/2, L/2).
  double wrap(double x) const;
  const RealField& ksq() const { return ksq_; }
  bool operator==(const Grid& o) const { return d == o.d && n == o.n && L == o.L; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

  // Calls fn(idx, x) for every grid point, x a pointer to d coordinates.
  template <class Fn>
  void for_each(Fn&& fn) const {
    std::vector<int> ix(d, 0);
    std::vector<double> x(d);
    for (int a = 0; a < d; ++a) x[a] = coord(0);
    for (std::size_t idx = 0; idx < total_; ++idx) {
      fn(idx, x.data());
      for (int a = d - 1; a >= 0; --a) {
        if (++ix[a] < n) {
          x[a] = coord(ix[a]);
          break;
        }
        ix[a] = 0;
        x[a] = coord(0);
      }
    }
  }

private:
  std::size_t total_ = 0;
  RealField ksq_;
};

// In-place complex FFT on a grid. backward() includes the 1/N normalization.
class Fft {
public:
  explicit Fft(const Grid& grid);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  void forward(Field& f) const;
  void backward(Field& f) const;
  const Grid& grid() const { return grid_; }

private:
  Grid grid_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// Sets the FFTW thread count for plans created afterwards.
void set_fft_threads(int n);

// Discrete L2 inner product sum f conj(g) dV, linear in the first argument.
cplx inner(const Grid& g, const Field& f, const Field& h);
double norm2(const Grid& g, const Field& f);
double norm_p(const Grid& g, const Field& f, double p);
// -Laplacian applied spectrally.
Field neg_laplacian(const Fft& fft, const Field& f);
// Spectral translation f(x - s).
Field translate(const Fft& fft, const Field& f, const Vec& shift);

}  // namespace nlslab

#endif
