#ifndef NLSLAB_SCENARIO_HPP
#define NLSLAB_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/soliton.hpp"

namespace nlslab {

struct PerturbationSpec {
  std::string kind = "zero";  // zero | gaussian | noise
  double amplitude = 0.0;
  double width = 1.0;         // gaussian width, or noise correlation length
  Vec center;                 // gaussian centre (origin when empty)
  double phase = 0.0;
  Vec momentum;               // gaussian carrier wavevector (zero when empty)
  double cutoff = 2.0;        // noise: Fourier cutoff |k| <= cutoff
  std::uint64_t seed = 1;
};

struct MajorantConfig {
  double nu = 0.0;    // <= 0 selects (d+3)/2 + 0.5
  double m = 0.0;     // <= 0 selects 2p + 2
  double mu1 = 1.25;
  double kappa = 1.0;

  double nu_for(int d) const { return nu > 0.0 ? nu : (d + 3) / 2.0 + 0.5; }
  double m_for(double p) const { return m > 0.0 ? m : 2.0 * p + 2.0; }
  double mu2_for(int d, double p) const { return d * (0.5 - 1.0 / m_for(p)); }
};

struct FitConfig {
  double t_min = 2.0;
  double tolerance = 0.3;
  bool enabled = true;
};

struct Scenario {
  int schema_version = 1;
  std::string name = "scenario";
  int d = 1;
  int n = 4096;
  double box_length = 0.0;  // <= 0 selects 20/sqrt(E_min)
  double dt = 1e-3;
  double t_final = 1.0;
  double snapshot_every = 0.1;
  std::string nonlinearity_kind = "power";
  double p = 1.0;
  std::string nonlinearity_sign = "focusing";
  std::vector<SolitonParams> solitons;
  PerturbationSpec perturbation;
  MajorantConfig majorants;
  FitConfig fit;
  std::uint64_t seed = 1;
  double newton_tol = 1e-9;
  int newton_max_iters = 20;
  double base_E = 1.0;  // reference frequency of the ground-state family
  // Decompose every k-th snapshot (1 = all).
  int decompose_every = 1;
  // Assemble the differentiated orthogonality system at every decomposition.
  bool rates = true;

  Grid grid() const;
  double effective_box() const;
  int steps_per_snapshot() const;
  int snapshot_count() const;
};

}  // namespace nlslab

#endif
