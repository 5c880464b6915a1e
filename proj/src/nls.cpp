#include "nlslab/nls.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nlslab/error.hpp"

namespace nlslab {

int Scenario::steps_per_snapshot() const {
  long k = std::lround(snapshot_every / dt);
  require(k >= 1 && std::abs(k * dt - snapshot_every) <= 1e-9 * snapshot_every,
          "snapshot cadence must be a multiple of dt");
  return static_cast<int>(k);
}

int Scenario::snapshot_count() const {
  long k = std::lround(t_final / snapshot_every);
  require(k >= 1 && std::abs(k * snapshot_every - t_final) <= 1e-9 * t_final,
          "t_final must be a multiple of the snapshot cadence");
  return static_cast<int>(k);
}

double Scenario::effective_box() const {
  if (box_length > 0.0) return box_length;
  double emin = base_E;
  for (const auto& s : solitons) emin = std::min(emin, s.E);
  return 20.0 / std::sqrt(emin);
}

Grid Scenario::grid() const { return Grid(d, n, effective_box()); }

void check_time_step(const Grid& grid, double dt) {
  double k2 = grid.d * grid.k_max() * grid.k_max();
  require(std::abs(dt) * k2 <= std::numbers::pi * (1.0 + 1e-12), "time step violates dt |k|^2_max <= pi");
}

Stepper::Stepper(const Grid& grid, const NonlinearityModel& model, double dt)
    : grid_(grid), model_(model), dt_(dt), fft_(std::make_shared<Fft>(grid)) {
  require(dt != 0.0 && std::isfinite(dt), "time step must be nonzero");
  check_time_step(grid, dt);
  linear_.resize(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < linear_.size(); ++i) linear_[i] = std::polar(1.0, -dt * grid.ksq()[i]);
}

double Stepper::nonlinear_phase(Field& f, double tau) const {
  double total = 0.0;
  const double p = model_.p();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    double s = std::norm(f[i]);
    total += s;
    double F = p == 1.0 ? -s : (p == 0.5 ? -std::sqrt(s) : model_.F(s));
    f[i] *= std::polar(1.0, -tau * F);
  }
  if (!std::isfinite(total)) throw LabError(ErrorKind::BlowUp, "non-finite field values");
  return total;
}

void Stepper::step(FieldState& s) const { advance(s, 1); }

void Stepper::advance(FieldState& s, long n) const {
  require(s.grid == grid_, "state grid does not match stepper");
  if (n <= 0) return;
  nonlinear_phase(s.values, 0.5 * dt_);
  for (long k = 0; k < n; ++k) {
    fft_->forward(s.values);
    s.values *= linear_;
    fft_->backward(s.values);
    nonlinear_phase(s.values, k + 1 < n ? dt_ : 0.5 * dt_);
  }
  s.t += n * dt_;
}

FieldState step(const FieldState& state, double dt, const NonlinearityModel& model) {
  Stepper st(state.grid, model, dt);
  FieldState out = state;
  st.step(out);
  return out;
}

ConservedQuantities conserved(const FieldState& state, const NonlinearityModel& model, const Fft* fft) {
  const Grid& g = state.grid;
  std::unique_ptr<Fft> own;
  if (!fft) {
    own = std::make_unique<Fft>(g);
    fft = own.get();
  }
  ConservedQuantities q;
  double pot = 0.0;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < state.values.size(); ++i) {
    double s = std::norm(state.values[i]);
    mass += s;
    pot += model.U(s);
  }
  Field hat = state.values;
  fft->forward(hat);
  double kin = (g.ksq() * hat.abs2()).sum() / static_cast<double>(g.size());
  q.mass = mass * g.dV();
  q.energy = (kin + pot) * g.dV();
  return q;
}

Field make_perturbation(const PerturbationSpec& spec, const Grid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  Field chi = Field::Zero(N);
  if (spec.kind == "zero") return chi;
  if (spec.kind == "gaussian") {
    require(spec.width > 0.0, "gaussian width must be positive");
    require(spec.center.empty() || static_cast<int>(spec.center.size()) == grid.d, "gaussian centre dimension");
    require(spec.momentum.empty() || static_cast<int>(spec.momentum.size()) == grid.d, "gaussian momentum dimension");
    grid.for_each([&](std::size_t idx, const double* x) {
      double r2 = 0.0, kx = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        double c = spec.center.empty() ? 0.0 : spec.center[a];
        double y = grid.wrap(x[a] - c);
        r2 += y * y;
        if (!spec.momentum.empty()) kx += spec.momentum[a] * (c + y);
      }
      chi[static_cast<Eigen::Index>(idx)] =
          std::polar(spec.amplitude * std::exp(-r2 / (2.0 * spec.width * spec.width)), spec.phase + kx);
    });
    return chi;
  }
  if (spec.kind == "noise") {
    require(spec.cutoff > 0.0, "noise cutoff must be positive");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> nd;
    Fft fft(grid);
    for (Eigen::Index i = 0; i < N; ++i) {
      double re = nd(rng), im = nd(rng);
      double k2 = grid.ksq()[i];
      chi[i] = k2 <= spec.cutoff * spec.cutoff ? cplx(re, im) : cplx(0.0, 0.0);
    }
    fft.backward(chi);
    // Localize with a Gaussian envelope so the L1 part of the smallness norm stays finite.
    grid.for_each([&](std::size_t idx, const double* x) {
      double r2 = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        double c = spec.center.empty() ? 0.0 : spec.center[a];
        double y = grid.wrap(x[a] - c);
        r2 += y * y;
      }
      chi[static_cast<Eigen::Index>(idx)] *= std::exp(-r2 / (2.0 * spec.width * spec.width));
    });
    double peak = chi.abs().maxCoeff();
    if (peak > 0.0) chi *= spec.amplitude / peak;
    return chi;
  }
  throw LabError(ErrorKind::ContractViolation, "unknown perturbation kind '" + spec.kind + "'");
}

double smallness_norm(const Field& chi, const Grid& grid, double m) {
  require(m > 1.0, "m must exceed 1");
  double mp = m / (m - 1.0);
  double l1 = chi.abs().sum() * grid.dV();
  Fft fft(grid);
  Field hat = chi;
  fft.forward(hat);
  // Unitary transform: chi_hat(k) = (2 pi)^{-d/2} int chi e^{-ikx} dx.
  double scale = grid.dV() * std::pow(2.0 * std::numbers::pi, -grid.d / 2.0);
  double dk = std::pow(2.0 * std::numbers::pi / grid.L, grid.d);
  double acc = (hat.abs() * scale).pow(mp).sum() * dk;
  return l1 + std::pow(acc, 1.0 / mp);
}

Field initial_field(const Scenario& sc, const ProfileFamily& family) {
  Grid g = sc.grid();
  Field psi = make_perturbation(sc.perturbation, g);
  for (const auto& s : sc.solitons) add_soliton(psi, s, family, g);
  return psi;
}

double wrap_time(const Scenario& sc) {
  const double half = 0.5 * sc.effective_box();
  double t = std::numeric_limits<double>::infinity();
  for (const auto& s : sc.solitons) {
    double margin = 10.0 / std::sqrt(s.E);
    for (int a = 0; a < sc.d; ++a) {
      if (s.v[a] == 0.0) continue;
      double dist = s.v[a] > 0.0 ? half - margin - s.b[a] : half - margin + s.b[a];
      t = std::min(t, std::max(0.0, dist / std::abs(s.v[a])));
    }
  }
  return t;
}

double radiation_wrap_time(const Scenario& sc) {
  const auto& p = sc.perturbation;
  if (p.kind != "gaussian" || p.amplitude == 0.0) return std::numeric_limits<double>::infinity();
  const double half = 0.5 * sc.effective_box();
  double k0 = p.momentum.empty() ? 0.0 : norm(p.momentum);
  double speed = 2.0 * (k0 + 3.0 / p.width);
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < sc.d; ++a) {
    double c = p.center.empty() ? 0.0 : p.center[a];
    t = std::min(t, std::max(0.0, half - std::abs(c)) / speed);
  }
  return t;
}

void validate_scenario(const Scenario& sc) {
  require(sc.schema_version == 1, "unsupported scenario schema version");
  require(sc.d >= 1 && sc.d <= 3, "dimension must be 1, 2 or 3");
  require(sc.solitons.size() <= 8, "at most 8 solitons");
  require(sc.dt > 0.0 && sc.t_final > 0.0, "dt and t_final must be positive");
  NonlinearityModel model = NonlinearityModel::from_config(sc.nonlinearity_kind, sc.p, sc.nonlinearity_sign);
  require(model.energy_subcritical(sc.d), "exponent violates p < 2/(d-2)");
  Grid g = sc.grid();
  check_time_step(g, sc.dt);
  sc.steps_per_snapshot();
  sc.snapshot_count();
  for (const auto& s : sc.solitons) {
    require(s.dim() == sc.d && static_cast<int>(s.v.size()) == sc.d, "soliton dimension mismatch");
    require(s.finite() && s.E > 0.0, "invalid soliton parameters");
    check_margin(s, g);
    check_hypotheses(model, s.E, sc.d);
  }
  for (std::size_t j = 0; j < sc.solitons.size(); ++j)
    for (std::size_t k = j + 1; k < sc.solitons.size(); ++k)
      collision_geometry(sc.solitons[j], sc.solitons[k], sc.majorants.kappa);
  require(wrap_time(sc) >= sc.t_final, "a soliton wraps around the box before t_final");
}

void run(const Scenario& sc, const ProfileFamily& family, const SnapshotSink& sink) {
  validate_scenario(sc);
  NonlinearityModel model(sc.p);
  require(std::abs(family.p() - sc.p) < 1e-15 && family.d() == sc.d, "profile family does not match scenario");
  Grid g = sc.grid();
  Stepper stepper(g, model, sc.dt);
  Snapshot snap;
  snap.state.grid = g;
  snap.state.values = initial_field(sc, family);
  snap.state.t = 0.0;
  snap.q = conserved(snap.state, model, &stepper.fft());
  snap.index = 0;
  sink(snap);
  const int per = sc.steps_per_snapshot();
  const int count = sc.snapshot_count();
  for (int k = 1; k <= count; ++k) {
    stepper.advance(snap.state, per);
    snap.state.t = k * sc.snapshot_every;
    snap.q = conserved(snap.state, model, &stepper.fft());
    snap.index = k;
    sink(snap);
  }
}

}  // namespace nlslab
