#ifndef NLSLAB_LAB_HPP
#define NLSLAB_LAB_HPP

#include <json.hpp>
#include <string>
#include <vector>

#include "nlslab/linops.hpp"
#include "nlslab/modulation.hpp"
#include "nlslab/nls.hpp"
#include "nlslab/scenario.hpp"

namespace nlslab {

inline constexpr int kScenarioSchemaVersion = 1;

Scenario scenario_from_json(const nlohmann::json& j);
// Array of {beta, E, b, v} records; missing b and v default to zero vectors of length d.
std::vector<SolitonParams> solitons_from_json(const nlohmann::json& arr, int d);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario load_scenario(const std::string& path);

struct DecayFit {
  double t_a = 0.0, t_b = 0.0;
  int samples = 0;
  double alpha = 0.0;      // value ~ C t^{-alpha}
  double intercept = 0.0;  // log C
  double residual = 0.0;   // RMS residual in log coordinates
  double target = 0.0;
  bool has_target = false;
  std::string verdict = "skipped";  // pass | fail | info | skipped
  std::string note;
};

// Ordinary least squares of log value against log t over samples with t in [t_a, t_b].
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t_a, double t_b);
// Adds a verdict against target with absolute tolerance.
void judge(DecayFit& fit, double target, double tolerance);
nlohmann::json to_json(const DecayFit& f);

struct LimitEstimate {
  std::vector<SolitonParams> sigma_plus;  // beta and b at t = 0 of the fitted lines
  std::vector<double> omega_plus;         // slope of the fitted beta line
  double tail_start = 0.0;
  // Per soliton: |beta - beta_+(t)| + |E - E_+| + |b - b_+(t)| + |v - v_+| at each record time.
  std::vector<std::vector<double>> deviation;
  std::vector<double> t;
  std::vector<DecayFit> fits;
  std::vector<bool> decaying;
};

// Averages E and v over records with t >= tail_start and fits beta, b linearly there.
LimitEstimate limit_parameters(const std::vector<DecompositionRecord>& records, double tail_start);

struct ExperimentOptions {
  std::string out_dir;        // empty: no files written
  int snapshot_stride = 0;    // write every k-th snapshot binary (0: none)
  bool keep_fields = false;   // keep chi samples in memory (tests)
};

struct SeriesRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double psi_l2 = 0.0;
};

struct ExperimentResult {
  Scenario scenario;
  std::vector<SeriesRow> series;
  std::vector<DecompositionRecord> records;
  std::vector<Field> chi;     // when keep_fields
  std::vector<double> collision;  // ordered-pair collision times
  std::vector<CollisionGeometry> geometry;
  RateSeries rates;
  DecayFit fit_chi_m;
  DecayFit fit_M1;
  LimitEstimate limits;
  bool lost = false;
  std::string lost_reason;
  double wrap = 0.0;
  double radiation_wrap = 0.0;
  double smallness = 0.0;
  double max_mass_drift = 0.0;
  double max_energy_drift = 0.0;
  double max_residual_rel = 0.0;
  double chi_l2_initial = 0.0;
  double chi_l2_max = 0.0;
  bool chi_bounded = true;       // max ||chi||_2 <= 2 ||chi(0)||_2
  bool chi_bound_applies = true; // false when ||chi(0)||_2 < 1e-6 ||psi||_2
  nlohmann::json report;
};

ExperimentResult run_experiment(const Scenario& sc, const ExperimentOptions& opts = {});

struct SnapshotDecomposition {
  std::vector<DecompositionRecord> records;
  std::vector<double> collision;
  bool lost = false;
  std::string reason;
};

// Decomposes snapshot files in the given order with continuation from sc.solitons (parameters at t = 0).
// Model, majorant and Newton settings come from sc; stops at the first lost decomposition.
SnapshotDecomposition decompose_snapshots(const std::vector<std::string>& files, const Scenario& sc);

// Weighted-norm decay of the linearized flow started from a projected Gaussian.
struct DispersiveProbeConfig {
  double p = 0.5;
  int d = 3;
  double E = 1.0;
  int n = 128;
  double L = 64.0;
  double T = 20.0;
  double dt = 0.05;
  double width = 2.0;
  double amplitude = 1.0;
  double nu0 = -1.0;            // negative selects d/2 + 1
  bool remove_internal_modes = true;
  int sample_every = 4;
  double t_min = 2.0;
  double tolerance = 0.3;
};

struct DispersiveProbeResult {
  LinearizedTrajectory trajectory;
  DecayFit fit;
  double initial_norm = 0.0;     // ||P f0||_2
  std::vector<cplx> removed;     // discrete eigenvalues projected out besides zero
  double max_pairing = 0.0;      // max_k |<P f0, sigma3 xi_k>| after projection
};

DispersiveProbeResult dispersive_probe(const DispersiveProbeConfig& cfg);

// Writes report.json, records.csv, series.csv, plot.csv, rates.csv and geometry.csv into dir.
void write_outputs(const ExperimentResult& r, const std::string& dir);
void write_records_csv(const std::vector<DecompositionRecord>& records, int d, const std::string& path);

}  // namespace nlslab

#endif
