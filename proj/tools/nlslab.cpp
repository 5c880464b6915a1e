// nlslab command-line front end.
// Exit status: 0 success, 1 a reported verdict failed, 2 usage or runtime error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "nlslab/error.hpp"
#include "nlslab/groundstate.hpp"
#include "nlslab/io.hpp"
#include "nlslab/lab.hpp"
#include "nlslab/linops.hpp"

using namespace nlslab;
using nlohmann::json;

namespace {

struct Globals {
  int threads = 1;
  long long seed = -1;
  std::string config;
};

Scenario scenario_with_globals(const Globals& g, const std::string& path) {
  require(!path.empty(), "a scenario file is required (--config)");
  Scenario sc = load_scenario(path);
  if (g.seed >= 0) {
    sc.seed = static_cast<std::uint64_t>(g.seed);
    sc.perturbation.seed = sc.seed;
  }
  return sc;
}

// Any top-level report entry with verdict "fail", plus the decomposition status.
bool report_failed(const json& rep) {
  for (const auto& [key, val] : rep.items())
    if (val.is_object() && val.contains("verdict") && val["verdict"] == "fail") return true;
  return rep.contains("decomposition") && rep["decomposition"].value("status", "ok") != "ok";
}

void print_verdicts(const json& rep) {
  for (const auto& [key, val] : rep.items())
    if (val.is_object() && val.contains("verdict"))
      std::printf("%-18s %s\n", key.c_str(), val["verdict"].get<std::string>().c_str());
  if (rep.contains("decomposition"))
    std::printf("%-18s %s\n", "decomposition", rep["decomposition"].value("status", "ok").c_str());
}

int cmd_simulate(const Globals& g, const std::string& out, int snapshots) {
  Scenario sc = scenario_with_globals(g, g.config);
  ExperimentOptions opts;
  opts.out_dir = out;
  opts.snapshot_stride = snapshots;
  ExperimentResult r = run_experiment(sc, opts);
  print_verdicts(r.report);
  return report_failed(r.report) ? 1 : 0;
}

int cmd_decompose(const Globals& g, const std::string& dir, const std::string& guess, const std::string& out) {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no .bin snapshots in " + dir);

  Scenario sc;
  if (!g.config.empty()) sc = scenario_with_globals(g, g.config);
  std::ifstream in(guess);
  require(in.good(), "cannot open guess file " + guess);
  json gj = json::parse(in);
  require(gj.contains("solitons"), "guess file needs a solitons array");
  SnapshotFile first = read_snapshot(files.front());
  sc.d = first.state.grid.d;
  sc.p = first.p;
  sc.solitons = solitons_from_json(gj.at("solitons"), sc.d);
  require(!sc.solitons.empty(), "guess file lists no solitons");
  if (g.config.empty()) sc.base_E = sc.solitons.front().E;

  SnapshotDecomposition dec = decompose_snapshots(files, sc);
  write_records_csv(dec.records, sc.d, out);
  std::printf("records %zu\n", dec.records.size());
  if (dec.lost) {
    std::fprintf(stderr, "decomposition lost: %s\n", dec.reason.c_str());
    return 1;
  }
  return 0;
}

int cmd_fit_decay(const std::string& path, const std::string& column, double t_a, double t_b, double target,
                  double tol) {
  CsvTable tab = read_csv(path);
  const std::size_t ct = tab.column("t"), cv = tab.column(column);
  std::vector<double> t, v;
  for (const auto& row : tab.rows) {
    t.push_back(row[ct]);
    v.push_back(row[cv]);
  }
  if (t_b <= 0.0) t_b = t.empty() ? 0.0 : t.back();
  DecayFit f = fit_decay(t, v, t_a, t_b);
  if (target >= 0.0) judge(f, target, tol);
  std::printf("%s\n", to_json(f).dump(2).c_str());
  return f.verdict == "fail" ? 1 : 0;
}

int cmd_ground_state(double E, int d, double p, double rmax, const std::string& out) {
  NonlinearityModel model(p);
  RadialGridSpec spec;
  spec.r_max = rmax;
  GroundStateProfile prof = solve_ground_state(model, E, d, spec);
  profile_E_derivative(model, prof);
  CsvWriter w(out, {"r", "phi", "dphi", "phi_E"});
  for (std::size_t i = 0; i < prof.r.size(); ++i) w.row({prof.r[i], prof.phi[i], prof.dphi[i], prof.phi_E[i]});
  MassNorms mn = mass_norms(prof);
  std::printf("phi0 %s e %s n %s\n", fmt_num(prof.phi0).c_str(), fmt_num(mn.e).c_str(), fmt_num(mn.n).c_str());
  return 0;
}

int cmd_linops_decay(const DispersiveProbeConfig& cfg, const std::string& out) {
  DispersiveProbeResult r = dispersive_probe(cfg);
  CsvWriter w(out, {"t", "weighted_norm"});
  for (std::size_t i = 0; i < r.trajectory.t.size(); ++i) w.row({r.trajectory.t[i], r.trajectory.weighted_norm[i]});
  std::printf("%s\n", to_json(r.fit).dump(2).c_str());
  return r.fit.verdict == "fail" ? 1 : 0;
}

int cmd_linops_spectrum(double E, int d, double p, int sectors, const std::string& out) {
  NonlinearityModel model(p);
  ProfileFamily family = ProfileFamily::build(model, E, d);
  Grid g(d, 8, 20.0 / std::sqrt(E));
  LinearizedOperator op(model, family, E, g);
  SpectrumOptions so;
  so.throw_on_drift = false;
  SpectrumReport rep = point_spectrum_scan(op, sectors, so);
  std::printf("zero multiplicity %d\n", rep.zero_multiplicity);
  CsvWriter w(out, {"sector", "re", "im", "drift"});
  for (std::size_t i = 0; i < rep.gap_eigenvalues.size(); ++i) {
    w.row({double(rep.gap_sectors[i]), rep.gap_eigenvalues[i].real(), rep.gap_eigenvalues[i].imag(),
           rep.gap_drift[i]});
    std::printf("sector %d  %s %si  drift %s\n", rep.gap_sectors[i], fmt_num(rep.gap_eigenvalues[i].real()).c_str(),
                fmt_num(rep.gap_eigenvalues[i].imag()).c_str(), fmt_num(rep.gap_drift[i]).c_str());
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  std::ifstream in(dir + "/report.json");
  require(in.good(), "cannot open " + dir + "/report.json");
  json rep = json::parse(in);
  print_verdicts(rep);
  return report_failed(rep) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlslab: multi-soliton NLS experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "FFT threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "override the scenario seed");
  app.add_option("--config", g.config, "scenario JSON");

  auto* sim = app.add_subcommand("simulate", "run a scenario end to end");
  sim->fallthrough();
  std::string sim_out = "out";
  int sim_snapshots = 0;
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--snapshots", sim_snapshots, "write every k-th snapshot binary (0: none)");

  auto* dec = app.add_subcommand("decompose", "decompose snapshot binaries");
  dec->fallthrough();
  std::string dec_dir, dec_guess, dec_out = "records.csv";
  dec->add_option("--snapshots", dec_dir, "snapshot directory")->required();
  dec->add_option("--guess", dec_guess, "JSON with a solitons array (parameters at t = 0)")->required();
  dec->add_option("--out", dec_out, "records CSV");

  auto* fit = app.add_subcommand("fit-decay", "log-log fit of a CSV column against t");
  fit->fallthrough();
  std::string fit_in, fit_col = "chi_lm";
  double fit_a = 2.0, fit_b = 0.0, fit_target = -1.0, fit_tol = 0.3;
  fit->add_option("--in", fit_in, "CSV with a t column")->required();
  fit->add_option("--column", fit_col, "column to fit");
  fit->add_option("--t-min", fit_a, "window start");
  fit->add_option("--t-max", fit_b, "window end (0: last sample)");
  fit->add_option("--target", fit_target, "expected exponent (negative: no verdict)");
  fit->add_option("--tolerance", fit_tol, "absolute tolerance on the exponent");

  auto* gs = app.add_subcommand("ground-state", "radial ground state profile");
  gs->fallthrough();
  double gs_E = 1.0, gs_p = 1.0, gs_rmax = 0.0;
  int gs_d = 1;
  std::string gs_out = "profile.csv";
  gs->add_option("--E", gs_E, "frequency")->check(CLI::PositiveNumber);
  gs->add_option("--d", gs_d, "dimension")->check(CLI::Range(1, 3));
  gs->add_option("--p", gs_p, "power")->check(CLI::PositiveNumber);
  gs->add_option("--rmax", gs_rmax, "radial extent (0: 40/sqrt(E))");
  gs->add_option("--out", gs_out, "profile CSV");

  auto* lin = app.add_subcommand("linops", "linearized operator tools");
  lin->fallthrough();
  lin->require_subcommand(1);
  auto* decay = lin->add_subcommand("decay", "weighted-norm decay of a projected Gaussian");
  decay->fallthrough();
  DispersiveProbeConfig pc;
  std::string decay_out = "decay.csv";
  decay->add_option("--E", pc.E, "frequency")->check(CLI::PositiveNumber);
  decay->add_option("--d", pc.d, "dimension")->check(CLI::Range(1, 3));
  decay->add_option("--p", pc.p, "power")->check(CLI::PositiveNumber);
  decay->add_option("--grid", pc.n, "points per axis");
  decay->add_option("--L", pc.L, "box length");
  decay->add_option("--T", pc.T, "final time");
  decay->add_option("--dt", pc.dt, "time step");
  decay->add_option("--width", pc.width, "Gaussian width");
  decay->add_option("--out", decay_out, "CSV (t, weighted_norm)");
  auto* spec = lin->add_subcommand("spectrum", "discrete spectrum by radial sectors");
  spec->fallthrough();
  double sp_E = 1.0, sp_p = 1.0;
  int sp_d = 3, sp_sectors = 1;
  std::string sp_out = "spectrum.csv";
  spec->add_option("--E", sp_E, "frequency")->check(CLI::PositiveNumber);
  spec->add_option("--d", sp_d, "dimension")->check(CLI::Range(1, 3));
  spec->add_option("--p", sp_p, "power")->check(CLI::PositiveNumber);
  spec->add_option("--sectors", sp_sectors, "highest angular sector")->check(CLI::NonNegativeNumber);
  spec->add_option("--out", sp_out, "eigenvalue CSV");

  auto* rep = app.add_subcommand("report", "summarize report.json verdicts");
  rep->fallthrough();
  std::string rep_dir = "out";
  rep->add_option("dir", rep_dir, "experiment output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_fft_threads(g.threads);
    if (*sim) return cmd_simulate(g, sim_out, sim_snapshots);
    if (*dec) return cmd_decompose(g, dec_dir, dec_guess, dec_out);
    if (*fit) return cmd_fit_decay(fit_in, fit_col, fit_a, fit_b, fit_target, fit_tol);
    if (*gs) return cmd_ground_state(gs_E, gs_d, gs_p, gs_rmax, gs_out);
    if (*decay) return cmd_linops_decay(pc, decay_out);
    if (*spec) return cmd_linops_spectrum(sp_E, sp_d, sp_p, sp_sectors, sp_out);
    if (*rep) return cmd_report(rep_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
