#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlslab/error.hpp"
#include "nlslab/io.hpp"
#include "nlslab/lab.hpp"

using namespace nlslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "nlslab_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json small_scenario() {
  return nlohmann::json::parse(R"({
    "schema_version": 1, "name": "unit", "dimension": 1,
    "grid": {"n": 256, "box_length": 40.0},
    "time": {"dt": 2e-3, "t_final": 1.0, "snapshot_every": 0.1},
    "nonlinearity": {"kind": "power", "p": 1.0, "sign": "focusing"},
    "solitons": [{"beta": 0.0, "E": 1.0, "b": [0.0], "v": [0.0]}],
    "perturbation": {"kind": "noise", "amplitude": 1e-3, "width": 1.0}
  })");
}

std::vector<double> times(int n, double t0, double dt) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(t0 + i * dt);
  return t;
}

}  // namespace

TEST_CASE("decay fit recovers power laws") {
  auto t = times(200, 1.0, 0.1);
  std::vector<double> a, b, c;
  for (double s : t) {
    a.push_back(3.0 * std::pow(s, -0.75));
    b.push_back(std::pow(s, -1.5) * (1.0 + 0.01 * std::sin(s)));
    c.push_back(0.2);
  }
  CHECK(fit_decay(t, a, 2.0, 20.0).alpha == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(fit_decay(t, a, 2.0, 20.0).intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(std::abs(fit_decay(t, b, 2.0, 20.0).alpha - 1.5) < 0.02);
  CHECK(std::abs(fit_decay(t, c, 2.0, 20.0).alpha) < 1e-12);
  DecayFit f = fit_decay(t, a, 2.0, 20.0);
  judge(f, 1.0, 0.3);
  CHECK(f.verdict == "pass");
  judge(f, 1.1, 0.3);
  CHECK(f.verdict == "fail");
}

TEST_CASE("limit parameters of straight-line records") {
  std::vector<DecompositionRecord> recs;
  for (double t : times(50, 0.0, 0.2)) {
    DecompositionRecord r;
    r.t = t;
    r.sigma = {SolitonParams{0.1 + 0.9 * t, 1.2, {-3.0 + 0.4 * t}, {0.4}}};
    recs.push_back(r);
  }
  LimitEstimate lim = limit_parameters(recs, 4.0);
  REQUIRE(lim.sigma_plus.size() == 1);
  CHECK(lim.sigma_plus[0].E == doctest::Approx(1.2));
  CHECK(lim.sigma_plus[0].v[0] == doctest::Approx(0.4));
  CHECK(lim.sigma_plus[0].b[0] == doctest::Approx(-3.0));
  CHECK(lim.sigma_plus[0].beta == doctest::Approx(0.1));
  CHECK(lim.omega_plus[0] == doctest::Approx(0.9));
  for (double dev : lim.deviation[0]) CHECK(dev < 1e-9);
}

TEST_CASE("scenario JSON parsing") {
  Scenario sc = scenario_from_json(small_scenario());
  CHECK(sc.n == 256);
  CHECK(sc.seed == 1);
  CHECK(sc.perturbation.kind == "noise");
  CHECK(scenario_from_json(scenario_to_json(sc)).dt == sc.dt);

  auto bad = small_scenario();
  bad["grid"]["spacing"] = 0.1;
  CHECK_THROWS_AS(scenario_from_json(bad), LabError);
  bad = small_scenario();
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(scenario_from_json(bad), LabError);

  auto seeded = small_scenario();
  seeded["seed"] = 7;
  CHECK(scenario_from_json(seeded).perturbation.seed == 7);
  auto sol = solitons_from_json(nlohmann::json::parse(R"([{"beta": 0.5, "E": 2.0}])"), 3);
  REQUIRE(sol.size() == 1);
  CHECK(sol[0].b.size() == 3);
  CHECK(sol[0].v == Vec{0.0, 0.0, 0.0});
}

TEST_CASE("experiments are deterministic for a fixed seed") {
  Scenario sc = scenario_from_json(small_scenario());
  auto a = scratch("det_a"), b = scratch("det_b");
  ExperimentOptions oa, ob;
  oa.out_dir = a.string();
  ob.out_dir = b.string();
  run_experiment(sc, oa);
  run_experiment(sc, ob);
  CHECK(slurp(a / "records.csv") == slurp(b / "records.csv"));
  CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
  sc.perturbation.seed = 2;
  auto c = scratch("det_c");
  ExperimentOptions oc;
  oc.out_dir = c.string();
  run_experiment(sc, oc);
  CHECK(slurp(a / "records.csv") != slurp(c / "records.csv"));
}

TEST_CASE("unperturbed soliton: zero majorants, skipped fits, conservation") {
  auto j = small_scenario();
  j["perturbation"] = {{"kind", "zero"}};
  j["solitons"][0]["v"] = {0.2};
  ExperimentResult r = run_experiment(scenario_from_json(j));
  REQUIRE_FALSE(r.lost);
  REQUIRE(r.records.size() == 11);
  // Splitting error of the exact soliton is O(dt^2) = 4e-6 per unit time.
  for (const auto& rec : r.records) {
    CHECK(rec.chi_l2 < 1e-4);
    CHECK(rec.M0 < 1e-4);
  }
  CHECK_FALSE(r.chi_bound_applies);
  CHECK(r.fit_chi_m.verdict == "skipped");
  CHECK(r.max_mass_drift < 1e-12);
  CHECK(r.max_energy_drift < 1e-6);
  CHECK(r.records.back().sigma[0].b[0] == doctest::Approx(0.2).epsilon(1e-5));
}

TEST_CASE("decomposition from snapshot files matches the in-memory records") {
  Scenario sc = scenario_from_json(small_scenario());
  auto dir = scratch("snaps");
  ExperimentOptions o;
  o.out_dir = dir.string();
  o.snapshot_stride = 1;
  ExperimentResult r = run_experiment(sc, o);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir / "snapshots"))
    if (e.path().extension() == ".bin") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() == r.records.size());
  SnapshotDecomposition sd = decompose_snapshots(files, sc);
  REQUIRE_FALSE(sd.lost);
  REQUIRE(sd.records.size() == r.records.size());
  for (std::size_t i = 0; i < sd.records.size(); ++i) {
    CHECK(sd.records[i].t == doctest::Approx(r.records[i].t));
    CHECK(std::abs(sd.records[i].sigma[0].E - r.records[i].sigma[0].E) < 1e-6);
  }
}
