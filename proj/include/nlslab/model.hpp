#ifndef NLSLAB_MODEL_HPP
#define NLSLAB_MODEL_HPP

#include <string>
#include <vector>

namespace nlslab {

// Focusing pure power F(s) = -s^p.
class NonlinearityModel {
public:
  explicit NonlinearityModel(double p = 1.0);

  static NonlinearityModel from_config(const std::string& kind, double p, const std::string& sign);

  double p() const { return p_; }
  double F(double s) const;
  double dF(double s) const;
  double d2F(double s) const;
  double U(double s) const;

  // Upper growth bound p < 2/(d-2) (any p for d <= 2).
  bool energy_subcritical(int d) const;
  // Lower growth bound F >= -C s^q with q < 2/d, i.e. p < 2/d for pure powers.
  bool mass_subcritical(int d) const;
  // T3 window for m = 2p+2: 4 <= m < 4/(d-2)+2 when d = 3, m >= 4 otherwise.
  bool m_window_ok(int d) const;
  double default_m() const { return 2.0 * p_ + 2.0; }

private:
  double p_;
};

struct GI {
  double g;
  double I;
};

GI eval_g_I(const NonlinearityModel& model, double E, double xi, double lambda);

struct HypothesisReport {
  double E = 0.0;
  int d = 0;
  double xi0 = 0.0;
  double xi1 = 0.0;
  double dg_xi0 = 0.0;
  double int_g_xi1 = 0.0;
  // Sampled lambda(xi) for H2 on the verification grid.
  std::vector<double> xi_samples;
  std::vector<double> lambda_profile;
  bool h0_upper = false;
  bool h0_lower = false;
  bool h1 = false;
  std::string h2;  // "pass" or "undetermined"
  bool pass() const { return h0_upper && h1 && h2 == "pass"; }
};

HypothesisReport check_hypotheses(const NonlinearityModel& model, double E, int d);

}  // namespace nlslab

#endif
