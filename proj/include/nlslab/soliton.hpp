#ifndef NLSLAB_SOLITON_HPP
#define NLSLAB_SOLITON_HPP

#include <string>

#include "nlslab/grid.hpp"
#include "nlslab/groundstate.hpp"

namespace nlslab {

// sigma = (beta, E, b, v); b is kept unwrapped and reduced only when sampling.
struct SolitonParams {
  double beta = 0.0;
  double E = 1.0;
  Vec b;
  Vec v;

  static SolitonParams at_rest(int d, double E, double beta = 0.0);
  int dim() const { return static_cast<int>(b.size()); }
  bool finite() const;
};

struct CollisionGeometry {
  double t0 = 0.0;
  Vec r0;
  double r0_norm = 0.0;
  double eps = 0.0;
  double min_distance = 0.0;  // min over t >= 0 of |b0 + t v0|
  int branch = 0;             // 1: t0 <= kappa <r0>, 2: otherwise
  double kappa = 1.0;
};

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }
double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);

// Samples w(x, sigma) = exp(i beta + i v.x/2) phi(x - b, E). The phase uses x = b + wrap(x - b)
// so its seam sits opposite the soliton centre.
Field soliton_state(const SolitonParams& sigma, const ProfileFamily& family, const Grid& grid);
Field soliton_state(const SolitonParams& sigma, const GroundStateProfile& profile, const Grid& grid);
void add_soliton(Field& out, const SolitonParams& sigma, const ProfileFamily& family, const Grid& grid);

// Half box must exceed 10/sqrt(E).
void check_margin(const SolitonParams& sigma, const Grid& grid);

SolitonParams free_trajectory(const SolitonParams& sigma0, double t);

CollisionGeometry collision_geometry(const SolitonParams& s0j, const SolitonParams& s0k, double kappa = 1.0,
                                     double v_min = 1e-8);

}  // namespace nlslab

#endif
