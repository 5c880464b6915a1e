#ifndef NLSLAB_GROUNDSTATE_HPP
#define NLSLAB_GROUNDSTATE_HPP

#include <vector>

#include "nlslab/model.hpp"

namespace nlslab {

// Zero entries select the defaults h = 1e-3/sqrt(E), r_max = 40/sqrt(E).
struct RadialGridSpec {
  double h = 0.0;
  double r_max = 0.0;
};

struct GroundStateProfile {
  double E = 0.0;
  int d = 0;
  double p = 1.0;
  double h = 0.0;
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<double> dphi;
  std::vector<double> d2phi;   // from the ODE, used to interpolate phi'
  std::vector<double> phi_E;   // empty until profile_E_derivative has been attached
  std::vector<double> dphi_E;
  double phi0 = 0.0;
  double tail_C = 0.0;      // phi ~ tail_C * sqrt(2 sqrt(E)/pi) r^{-nu} K_nu(sqrt(E) r)
  double r_match = 0.0;     // shooting / inward-tail junction
  double derivative_jump = 0.0;  // |phi'| mismatch at the junction
  int bisection_steps = 0;

  double r_max() const { return r.back(); }
  bool has_phi_E() const { return !phi_E.empty(); }
  double eval(double rr) const;
  double eval_dphi(double rr) const;
  double eval_phi_E(double rr) const;
  double eval_dphi_E(double rr) const;
  // Max-norm residual of the radial ODE on interior samples.
  double ode_residual(const NonlinearityModel& model) const;
};

struct MassNorms {
  double e = 0.0;
  double n = 0.0;
};

double sphere_area(int d);
double tail_shape(double r, double E, int d);
double tail_shape_derivative(double r, double E, int d);

GroundStateProfile solve_ground_state(const NonlinearityModel& model, double E, int d,
                                      const RadialGridSpec& grid = {});

// Centered difference in E with a half-step Richardson check. Returns phi_E samples and
// stores phi_E, dphi_E on the profile.
std::vector<double> profile_E_derivative(const NonlinearityModel& model, GroundStateProfile& profile);

MassNorms mass_norms(const GroundStateProfile& profile);

// Ground states for any E obtained from one base profile by the pure-power scaling
// phi(r, E) = s^{1/(2p)} phi(sqrt(s) r, E0), s = E/E0.
class ProfileFamily {
public:
  ProfileFamily() = default;
  explicit ProfileFamily(GroundStateProfile base);
  static ProfileFamily build(const NonlinearityModel& model, double E0, int d, const RadialGridSpec& grid = {});

  const GroundStateProfile& base() const { return base_; }
  int d() const { return base_.d; }
  double p() const { return base_.p; }
  double phi(double r, double E) const;
  double dphi(double r, double E) const;
  double phi_E(double r, double E) const;
  MassNorms norms(double E) const;
  // Radius beyond which phi(., E) is below ~1e-18 relative to phi(0).
  double support_radius(double E) const;

private:
  GroundStateProfile base_;
  MassNorms base_norms_;
};

}  // namespace nlslab

#endif
