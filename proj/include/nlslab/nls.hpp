#ifndef NLSLAB_NLS_HPP
#define NLSLAB_NLS_HPP

#include <functional>
#include <memory>

#include "nlslab/grid.hpp"
#include "nlslab/groundstate.hpp"
#include "nlslab/model.hpp"
#include "nlslab/scenario.hpp"

namespace nlslab {

struct FieldState {
  Grid grid;
  Field values;
  double t = 0.0;
  double box_length() const { return grid.L; }
};

struct ConservedQuantities {
  double mass = 0.0;
  double energy = 0.0;
};

// Strang splitting: half nonlinear phase, full linear Fourier step, half nonlinear phase.
class Stepper {
public:
  Stepper(const Grid& grid, const NonlinearityModel& model, double dt);
  double dt() const { return dt_; }
  // One full step.
  void step(FieldState& s) const;
  // n steps with the interior nonlinear half-steps merged.
  void advance(FieldState& s, long n) const;
  // Nonlinear rotation exp(-i tau F(|psi|^2)) in place; returns sum |psi|^2 as a finiteness probe.
  double nonlinear_phase(Field& f, double tau) const;
  const Fft& fft() const { return *fft_; }

private:
  Grid grid_;
  NonlinearityModel model_;
  double dt_;
  std::shared_ptr<Fft> fft_;
  Field linear_;
};

void check_time_step(const Grid& grid, double dt);

FieldState step(const FieldState& state, double dt, const NonlinearityModel& model);
ConservedQuantities conserved(const FieldState& state, const NonlinearityModel& model, const Fft* fft = nullptr);

// Perturbation chi_0 sampled on the grid.
Field make_perturbation(const PerturbationSpec& spec, const Grid& grid);
// N = ||chi||_1 + ||chi_hat||_{m'} with the unitary Fourier transform, 1/m + 1/m' = 1.
double smallness_norm(const Field& chi, const Grid& grid, double m);

struct Snapshot {
  FieldState state;
  ConservedQuantities q;
  int index = 0;
};

using SnapshotSink = std::function<void(const Snapshot&)>;

Field initial_field(const Scenario& sc, const ProfileFamily& family);
// Earliest time at which a soliton, carrying its 10/sqrt(E) margin, reaches a box face.
double wrap_time(const Scenario& sc);
// Earliest time at which the fast edge of the perturbation (|k - k0| <= 3/width) reaches a face.
double radiation_wrap_time(const Scenario& sc);
void validate_scenario(const Scenario& sc);
void run(const Scenario& sc, const ProfileFamily& family, const SnapshotSink& sink);

}  // namespace nlslab

#endif
