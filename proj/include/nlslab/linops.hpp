#ifndef NLSLAB_LINOPS_HPP
#define NLSLAB_LINOPS_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/groundstate.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

struct TwoComponentField {
  Field upper;
  Field lower;

  TwoComponentField() = default;
  TwoComponentField(Field u, Field l) : upper(std::move(u)), lower(std::move(l)) {}
  static TwoComponentField zero(const Grid& g);
  // (f, conj f) built from a scalar field.
  static TwoComponentField from_scalar(const Field& f);

  TwoComponentField& operator+=(const TwoComponentField& o);
  TwoComponentField& operator-=(const TwoComponentField& o);
  TwoComponentField operator+(const TwoComponentField& o) const;
  TwoComponentField operator-(const TwoComponentField& o) const;
  TwoComponentField operator*(cplx c) const;
  TwoComponentField sigma1() const { return {lower, upper}; }
  TwoComponentField sigma3() const { return {upper, -lower}; }
  TwoComponentField conj() const { return {upper.conjugate(), lower.conjugate()}; }
  // max |lower - conj(upper)|, zero for fields of the form (f, conj f).
  double conjugate_defect() const;
};

cplx inner(const Grid& g, const TwoComponentField& f, const TwoComponentField& h);
double norm2(const Grid& g, const TwoComponentField& f);

// L = (-Lap + E) sigma3 + V1 sigma3 + i V2 sigma2 on a periodic grid, soliton at the origin.
class LinearizedOperator {
public:
  LinearizedOperator(const NonlinearityModel& model, const ProfileFamily& family, double E, const Grid& grid);
  // V = 0 operator.
  static LinearizedOperator free(double E, const Grid& grid, int d_profile = 0);

  const Grid& grid() const { return grid_; }
  const Fft& fft() const { return *fft_; }
  double E() const { return E_; }
  bool has_potential() const { return family_ != nullptr; }
  const ProfileFamily& family() const;
  const NonlinearityModel& model() const { return model_; }
  const RealField& V1() const { return V1_; }
  const RealField& V2() const { return V2_; }
  // Radial potentials at distance r from the centre.
  double V1_at(double r) const;
  double V2_at(double r) const;

private:
  LinearizedOperator(const Grid& grid, double E);
  NonlinearityModel model_;
  const ProfileFamily* family_ = nullptr;
  double E_ = 0.0;
  Grid grid_;
  std::shared_ptr<Fft> fft_;
  RealField V1_, V2_;
};

TwoComponentField apply_L(const LinearizedOperator& op, const TwoComponentField& f);

struct SymmetryResiduals {
  double adjoint = 0.0;  // |<s3 L s3 f, g> - <f, L g>| / (|Lf| |g| + |f| |Lg|)
  double swap = 0.0;     // |s1 L s1 f + L f| / |L f|
};
SymmetryResiduals symmetry_checks(const LinearizedOperator& op, const TwoComponentField& f,
                                  const TwoComponentField& g);

// Basis vectors stored as real profiles u_i with type s_i: xi_i = u_i (1, s_i).
struct NullBasis {
  Grid grid;
  int d = 0;
  std::vector<RealField> u;
  std::vector<int> type;
  // Optional complex extra directions (discrete modes) appended after the 2d+2 null vectors.
  std::vector<TwoComponentField> extra;
  Eigen::MatrixXcd gram;
  double condition = 0.0;
  double e = 0.0;
  double n = 0.0;

  std::size_t size() const { return u.size() + extra.size(); }
  TwoComponentField xi(std::size_t i) const;
  // <f, sigma3 xi_k>
  cplx pair_sigma3(const TwoComponentField& f, std::size_t k) const;
};

NullBasis build_null_basis(const LinearizedOperator& op);
// Appends discrete-mode eigenvectors and rebuilds the gram matrix.
void extend_basis(NullBasis& basis, const std::vector<TwoComponentField>& modes);

// f - sum c_i xi_i with gram^T c = (<f, s3 xi_k>)_k.
TwoComponentField project_continuous(const NullBasis& basis, const TwoComponentField& f);
Eigen::VectorXcd projection_coefficients(const NullBasis& basis, const TwoComponentField& f);

// Per-point exp(-i t W) for W = [[V1, V2], [-V2, -V1]].
Eigen::Matrix2cd potential_propagator(double V1, double V2, double t);

struct LinearizedTrajectory {
  std::vector<double> t;
  std::vector<double> weighted_norm;
  std::vector<double> l2_norm;
  TwoComponentField final;
};

struct EvolveOptions {
  double nu0 = -1.0;          // weight exponent; negative selects d/2 + 1
  int sample_every = 1;       // steps between recorded samples
  const NullBasis* projector = nullptr;  // when set, growth is monitored in the projected sector
  Vec center;                 // weight centre, origin by default
};

LinearizedTrajectory evolve_linearized(const LinearizedOperator& op, const TwoComponentField& f0, double T,
                                       double dt, const EvolveOptions& opts = {});

// ||<x>^{-nu} f||_2
double weighted_norm(const Grid& g, const TwoComponentField& f, double nu, const Vec& center = {});

// Radial sector scan (angular momentum n = 0..sector_count) of the discrete spectrum.
struct SectorEigen {
  int sector = 0;
  int degeneracy = 1;
  std::vector<cplx> coarse;
  std::vector<cplx> fine;
};

struct SpectrumReport {
  int zero_multiplicity = 0;
  std::vector<int> zero_count_per_sector;
  std::vector<cplx> gap_eigenvalues;  // nonzero discrete eigenvalues reported at the fine resolution
  std::vector<int> gap_sectors;
  std::vector<double> gap_drift;
  double max_drift = 0.0;
  double zero_cluster_radius = 0.0;
  int n_coarse = 0;
  int n_fine = 0;
  double R = 0.0;
  std::vector<SectorEigen> sectors;
};

struct SpectrumOptions {
  int n_coarse = 600;
  double R = 0.0;              // 30/sqrt(E) when zero
  double zero_tol = 2e-2;      // relative to E
  double drift_tol = 1e-3;
  bool throw_on_drift = true;
};

SpectrumReport point_spectrum_scan(const LinearizedOperator& op, int sector_count, const SpectrumOptions& opts = {});

// Eigenpair of one radial sector at the given resolution: returns radial components
// (a(r), b(r)) of f = r^{-(d-1)/2} (a, b) for the eigenvalue closest to target.
struct RadialMode {
  cplx lambda;
  std::vector<double> r;
  Eigen::VectorXcd a, b;
};
RadialMode radial_mode(const LinearizedOperator& op, int sector, cplx target, int N, double R);

// Samples an n = 0 radial mode onto the grid as a two-component field.
TwoComponentField sample_radial_mode(const RadialMode& mode, const Grid& grid, int d);

}  // namespace nlslab

#endif
