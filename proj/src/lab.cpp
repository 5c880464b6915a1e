#include "nlslab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "nlslab/error.hpp"
#include "nlslab/io.hpp"
#include "nlslab/linops.hpp"

namespace nlslab {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw LabError(ErrorKind::ContractViolation, "unknown key '" + k + "' in " + where);
}

Vec vec_or_empty(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<Vec>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min()); }

struct Abort {};

}  // namespace

std::vector<SolitonParams> solitons_from_json(const json& arr, int d) {
  std::vector<SolitonParams> out;
  for (const json& s : arr) {
    check_keys(s, {"beta", "E", "b", "v"}, "soliton");
    SolitonParams p;
    p.beta = get_or(s, "beta", 0.0);
    p.E = s.at("E").get<double>();
    p.b = s.contains("b") ? s.at("b").get<Vec>() : Vec(d, 0.0);
    p.v = s.contains("v") ? s.at("v").get<Vec>() : Vec(d, 0.0);
    out.push_back(p);
  }
  return out;
}

Scenario scenario_from_json(const json& j) {
  check_keys(j, {"schema_version", "name", "dimension", "grid", "time", "nonlinearity", "solitons", "perturbation",
                 "majorants", "fit", "decomposition", "seed", "base_E"},
             "scenario");
  Scenario sc;
  sc.schema_version = j.at("schema_version").get<int>();
  require(sc.schema_version == kScenarioSchemaVersion, "unsupported scenario schema version");
  sc.name = get_or<std::string>(j, "name", sc.name);
  sc.d = j.at("dimension").get<int>();
  const json& grid = j.at("grid");
  check_keys(grid, {"n", "box_length"}, "grid");
  sc.n = grid.at("n").get<int>();
  sc.box_length = get_or(grid, "box_length", 0.0);
  const json& time = j.at("time");
  check_keys(time, {"dt", "t_final", "snapshot_every"}, "time");
  sc.dt = time.at("dt").get<double>();
  sc.t_final = time.at("t_final").get<double>();
  sc.snapshot_every = time.at("snapshot_every").get<double>();
  if (j.contains("nonlinearity")) {
    const json& nl = j.at("nonlinearity");
    check_keys(nl, {"kind", "p", "sign"}, "nonlinearity");
    sc.nonlinearity_kind = get_or<std::string>(nl, "kind", sc.nonlinearity_kind);
    sc.p = get_or(nl, "p", sc.p);
    sc.nonlinearity_sign = get_or<std::string>(nl, "sign", sc.nonlinearity_sign);
  }
  if (j.contains("solitons")) sc.solitons = solitons_from_json(j.at("solitons"), sc.d);
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    check_keys(p, {"kind", "amplitude", "width", "center", "phase", "momentum", "cutoff", "seed"}, "perturbation");
    auto& q = sc.perturbation;
    q.kind = get_or<std::string>(p, "kind", q.kind);
    q.amplitude = get_or(p, "amplitude", q.amplitude);
    q.width = get_or(p, "width", q.width);
    q.center = vec_or_empty(p, "center");
    q.phase = get_or(p, "phase", q.phase);
    q.momentum = vec_or_empty(p, "momentum");
    q.cutoff = get_or(p, "cutoff", q.cutoff);
    q.seed = get_or<std::uint64_t>(p, "seed", q.seed);
  }
  if (j.contains("majorants")) {
    const json& m = j.at("majorants");
    check_keys(m, {"nu", "m", "mu1", "kappa"}, "majorants");
    sc.majorants.nu = get_or(m, "nu", sc.majorants.nu);
    sc.majorants.m = get_or(m, "m", sc.majorants.m);
    sc.majorants.mu1 = get_or(m, "mu1", sc.majorants.mu1);
    sc.majorants.kappa = get_or(m, "kappa", sc.majorants.kappa);
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, {"t_min", "tolerance", "enabled"}, "fit");
    sc.fit.t_min = get_or(f, "t_min", sc.fit.t_min);
    sc.fit.tolerance = get_or(f, "tolerance", sc.fit.tolerance);
    sc.fit.enabled = get_or(f, "enabled", sc.fit.enabled);
  }
  if (j.contains("decomposition")) {
    const json& dcp = j.at("decomposition");
    check_keys(dcp, {"tol", "max_iters", "every", "rates"}, "decomposition");
    sc.newton_tol = get_or(dcp, "tol", sc.newton_tol);
    sc.newton_max_iters = get_or(dcp, "max_iters", sc.newton_max_iters);
    sc.decompose_every = get_or(dcp, "every", sc.decompose_every);
    sc.rates = get_or(dcp, "rates", sc.rates);
  }
  sc.seed = get_or<std::uint64_t>(j, "seed", sc.seed);
  // The top-level seed drives the noise unless the perturbation pins its own.
  if (!(j.contains("perturbation") && j.at("perturbation").contains("seed"))) sc.perturbation.seed = sc.seed;
  sc.base_E = get_or(j, "base_E", sc.base_E);
  require(sc.decompose_every >= 1, "decomposition cadence must be at least 1");
  const double d_min = (sc.d + 2) / 2.0;
  require(sc.majorants.nu_for(sc.d) > d_min, "nu must exceed (d+2)/2");
  require(sc.majorants.m_for(sc.p) > 2.0, "m must exceed 2");
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json j;
  j["schema_version"] = sc.schema_version;
  j["name"] = sc.name;
  j["dimension"] = sc.d;
  j["grid"] = {{"n", sc.n}, {"box_length", sc.effective_box()}};
  j["time"] = {{"dt", sc.dt}, {"t_final", sc.t_final}, {"snapshot_every", sc.snapshot_every}};
  j["nonlinearity"] = {{"kind", sc.nonlinearity_kind}, {"p", sc.p}, {"sign", sc.nonlinearity_sign}};
  j["solitons"] = json::array();
  for (const auto& s : sc.solitons) j["solitons"].push_back({{"beta", s.beta}, {"E", s.E}, {"b", s.b}, {"v", s.v}});
  const auto& q = sc.perturbation;
  j["perturbation"] = {{"kind", q.kind},     {"amplitude", q.amplitude}, {"width", q.width},   {"center", q.center},
                       {"phase", q.phase},   {"momentum", q.momentum},   {"cutoff", q.cutoff}, {"seed", q.seed}};
  j["majorants"] = {{"nu", sc.majorants.nu_for(sc.d)},
                    {"m", sc.majorants.m_for(sc.p)},
                    {"mu1", sc.majorants.mu1},
                    {"kappa", sc.majorants.kappa}};
  j["fit"] = {{"t_min", sc.fit.t_min}, {"tolerance", sc.fit.tolerance}, {"enabled", sc.fit.enabled}};
  j["decomposition"] = {
      {"tol", sc.newton_tol}, {"max_iters", sc.newton_max_iters}, {"every", sc.decompose_every}, {"rates", sc.rates}};
  j["seed"] = sc.seed;
  j["base_E"] = sc.base_E;
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorKind::ContractViolation, "cannot open scenario " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw LabError(ErrorKind::ContractViolation, "invalid scenario JSON in " + path + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw LabError(ErrorKind::ContractViolation, "malformed scenario " + path + ": " + e.what());
  }
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t_a, double t_b) {
  require(t.size() == value.size(), "series length mismatch");
  DecayFit f;
  f.t_a = t_a;
  f.t_b = t_b;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    require(t[i] > 0.0, "fit window must lie in t > 0");
    require(value[i] > 0.0, "nonpositive value in the fit window");
    x.push_back(std::log(t[i]));
    y.push_back(std::log(value[i]));
  }
  f.samples = static_cast<int>(x.size());
  require(f.samples >= 8, "fit needs at least 8 samples in the window");
  const double n = f.samples;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "fit window has a single distinct time");
  double slope = sxy / sxx;
  f.alpha = -slope;
  f.intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.verdict = "info";
  return f;
}

void judge(DecayFit& f, double target, double tolerance) {
  f.target = target;
  f.has_target = true;
  if (f.samples > 0) f.verdict = std::abs(f.alpha - target) <= tolerance ? "pass" : "fail";
}

json to_json(const DecayFit& f) {
  json j = {{"window", {f.t_a, f.t_b}}, {"samples", f.samples}, {"alpha", f.alpha}, {"intercept", f.intercept},
            {"residual", f.residual}, {"verdict", f.verdict}};
  if (f.has_target) j["target"] = f.target;
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

LimitEstimate limit_parameters(const std::vector<DecompositionRecord>& records, double tail_start) {
  std::vector<std::size_t> tail;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].t >= tail_start) tail.push_back(i);
  require(tail.size() >= 3, "tail window too short for limit parameters");
  const std::size_t N = records.front().sigma.size();
  require(N > 0, "limit parameters need solitons");
  const int d = records.front().sigma.front().dim();
  LimitEstimate out;
  out.tail_start = tail_start;
  auto line_fit = [&](auto value) {
    double mt = 0.0, my = 0.0;
    for (auto i : tail) {
      mt += records[i].t;
      my += value(i);
    }
    mt /= tail.size();
    my /= tail.size();
    double stt = 0.0, sty = 0.0;
    for (auto i : tail) {
      stt += (records[i].t - mt) * (records[i].t - mt);
      sty += (records[i].t - mt) * (value(i) - my);
    }
    double slope = stt > 0.0 ? sty / stt : 0.0;
    return std::pair<double, double>{my - slope * mt, slope};
  };
  std::vector<Vec> b_slope(N, Vec(d));
  for (std::size_t j = 0; j < N; ++j) {
    SolitonParams sp;
    sp.b.resize(d);
    sp.v.assign(d, 0.0);
    double Es = 0.0;
    for (auto i : tail) {
      Es += records[i].sigma[j].E;
      for (int a = 0; a < d; ++a) sp.v[a] += records[i].sigma[j].v[a];
    }
    sp.E = Es / tail.size();
    for (int a = 0; a < d; ++a) sp.v[a] /= tail.size();
    auto [b0, w] = line_fit([&](std::size_t i) { return records[i].sigma[j].beta; });
    sp.beta = b0;
    out.omega_plus.push_back(w);
    for (int a = 0; a < d; ++a) {
      auto [c0, s] = line_fit([&](std::size_t i) { return records[i].sigma[j].b[a]; });
      sp.b[a] = c0;
      b_slope[j][a] = s;
    }
    out.sigma_plus.push_back(sp);
  }
  out.deviation.assign(N, {});
  for (const auto& rec : records) {
    out.t.push_back(rec.t);
    for (std::size_t j = 0; j < N; ++j) {
      const auto& s = rec.sigma[j];
      const auto& p = out.sigma_plus[j];
      Vec db(d), dv(d);
      for (int a = 0; a < d; ++a) {
        db[a] = s.b[a] - (p.b[a] + b_slope[j][a] * rec.t);
        dv[a] = s.v[a] - p.v[a];
      }
      out.deviation[j].push_back(std::abs(s.beta - (p.beta + out.omega_plus[j] * rec.t)) + std::abs(s.E - p.E) +
                                 norm(db) + norm(dv));
    }
  }
  return out;
}

namespace {

void fit_limits(LimitEstimate& lim, double t_min) {
  for (const auto& dev : lim.deviation) {
    DecayFit f;
    f.t_a = t_min;
    f.t_b = lim.tail_start;
    std::vector<double> t, v;
    bool positive = true;
    double vmax = 0.0;
    for (std::size_t i = 0; i < dev.size(); ++i) {
      if (lim.t[i] < t_min || lim.t[i] > lim.tail_start) continue;
      t.push_back(lim.t[i]);
      v.push_back(dev[i]);
      positive = positive && dev[i] > 0.0;
      vmax = std::max(vmax, dev[i]);
    }
    bool decaying = false;
    if (vmax < 1e-10) {
      f.note = "deviation below 1e-10 throughout";
      decaying = true;
    } else if (t.size() < 8 || !positive) {
      f.note = "too few positive samples before the tail";
    } else {
      f = fit_decay(t, v, t_min, lim.tail_start);
      decaying = f.alpha > 0.0;
    }
    lim.fits.push_back(f);
    lim.decaying.push_back(decaying);
  }
}

json sigma_json(const SolitonParams& s) { return {{"beta", s.beta}, {"E", s.E}, {"b", s.b}, {"v", s.v}}; }

// Decomposes one field against guesses propagated freely from guess_t. Lost decompositions propagate.
DecompositionRecord decompose_state(const FieldState& state, const std::vector<SolitonParams>& guess, double guess_t,
                                    const ProfileFamily& family, const DecompositionConfig& dc,
                                    const NonlinearityModel& model, double m, double nu, Field& chi) {
  const Grid& g = state.grid;
  DecompositionRecord rec;
  rec.t = state.t;
  if (!guess.empty()) {
    std::vector<SolitonParams> predicted;
    for (const auto& s : guess) predicted.push_back(free_trajectory(s, state.t - guess_t));
    Decomposition dec = modulation_project(state, predicted, family, dc, &model);
    rec.sigma = dec.sigma;
    rec.ortho_residual = dec.residual;
    rec.newton_iters = dec.iters;
    rec.J = std::move(dec.J);
    rec.J0 = std::move(dec.J0);
    rec.rhs = std::move(dec.rhs);
    chi = std::move(dec.chi);
  } else {
    chi = state.values;
  }
  rec.chi_l2 = norm2(g, chi);
  rec.chi_lm = norm_p(g, chi, m);
  rec.M1 = majorant_M1(g, chi, rec.sigma, nu);
  rec.M2 = majorant_M2(g, chi, 2.0 * model.p() + 2.0);
  return rec;
}

// M0, collision times and rho over an accepted series.
std::vector<double> finish_records(std::vector<DecompositionRecord>& recs, const std::vector<SolitonParams>& sigma0) {
  const std::size_t N = sigma0.size();
  std::vector<double> collision;
  if (N > 0 && !recs.empty()) {
    auto coords = reconstruct_coordinates(recs);
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].M0 = majorant_M0(coords[i], sigma0);
  }
  if (N >= 2) collision = collision_times(recs, sigma0);
  for (auto& rec : recs) rec.rho = weight_rho(rec.t, collision);
  return collision;
}

bool lost_kind(const LabError& e) {
  return e.kind() == ErrorKind::DecompositionLost || e.kind() == ErrorKind::DegenerateConfiguration;
}

}  // namespace

ExperimentResult run_experiment(const Scenario& sc, const ExperimentOptions& opts) {
  validate_scenario(sc);
  ExperimentResult r;
  r.scenario = sc;
  NonlinearityModel model = NonlinearityModel::from_config(sc.nonlinearity_kind, sc.p, sc.nonlinearity_sign);
  ProfileFamily family = ProfileFamily::build(model, sc.base_E, sc.d);
  const Grid g = sc.grid();
  const double m = sc.majorants.m_for(sc.p);
  const double nu = sc.majorants.nu_for(sc.d);
  const std::size_t N = sc.solitons.size();
  r.wrap = wrap_time(sc);
  r.radiation_wrap = radiation_wrap_time(sc);
  r.smallness = smallness_norm(make_perturbation(sc.perturbation, g), g, m);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = j + 1; k < N; ++k)
      r.geometry.push_back(collision_geometry(sc.solitons[j], sc.solitons[k], sc.majorants.kappa));

  std::string snap_dir;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    if (opts.snapshot_stride > 0) {
      snap_dir = opts.out_dir + "/snapshots";
      std::filesystem::create_directories(snap_dir);
    }
  }

  DecompositionConfig dc;
  dc.tol = sc.newton_tol;
  dc.max_iters = sc.newton_max_iters;
  dc.rates = sc.rates;
  std::vector<SolitonParams> guess = sc.solitons;
  double guess_t = 0.0;
  ConservedQuantities q0;

  auto sink = [&](const Snapshot& snap) {
    const double t = snap.state.t;
    if (snap.index == 0) q0 = snap.q;
    SeriesRow row;
    row.t = t;
    row.mass = snap.q.mass;
    row.energy = snap.q.energy;
    row.mass_drift = rel(snap.q.mass, q0.mass);
    row.energy_drift = rel(snap.q.energy, q0.energy);
    row.psi_l2 = norm2(g, snap.state.values);
    r.series.push_back(row);
    r.max_mass_drift = std::max(r.max_mass_drift, row.mass_drift);
    r.max_energy_drift = std::max(r.max_energy_drift, row.energy_drift);

    Vec E_list;
    if (snap.index % sc.decompose_every == 0) {
      Field chi;
      DecompositionRecord rec;
      try {
        rec = decompose_state(snap.state, N > 0 ? guess : std::vector<SolitonParams>{}, guess_t, family, dc, model, m,
                              nu, chi);
      } catch (const LabError& e) {
        if (!lost_kind(e)) throw;
        r.lost = true;
        r.lost_reason = e.what();
        throw Abort{};
      }
      if (N > 0) {
        guess = rec.sigma;
        guess_t = t;
      }
      r.max_residual_rel = std::max(r.max_residual_rel, rec.ortho_residual / row.psi_l2);
      for (const auto& s : rec.sigma) E_list.push_back(s.E);
      if (opts.keep_fields) r.chi.push_back(std::move(chi));
      r.records.push_back(std::move(rec));
    } else {
      for (const auto& s : guess) E_list.push_back(s.E);
    }
    if (!snap_dir.empty() && snap.index % opts.snapshot_stride == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "/snap_%05d.bin", snap.index);
      write_snapshot(snap_dir + name, snap.state, sc.p, E_list);
    }
  };

  try {
    run(sc, family, sink);
  } catch (const Abort&) {
  }

  // Post-processing over the accepted records.
  auto& recs = r.records;
  r.collision = finish_records(recs, sc.solitons);
  if (N > 0 && recs.size() >= 3) r.rates = modulation_rates(recs);

  const double t_end = recs.empty() ? 0.0 : recs.back().t;
  const double t_b = std::min({t_end, r.wrap, r.radiation_wrap});
  std::vector<double> ts, chim, m1;
  for (const auto& rec : recs) {
    ts.push_back(rec.t);
    chim.push_back(rec.chi_lm);
    m1.push_back(rec.M1);
  }
  auto do_fit = [&](const std::vector<double>& v, double target, bool assert_target) {
    DecayFit f;
    f.t_a = sc.fit.t_min;
    f.t_b = t_b;
    if (!sc.fit.enabled) {
      f.note = "fits disabled";
      return f;
    }
    if (sc.perturbation.kind == "zero" || sc.perturbation.amplitude == 0.0) {
      f.note = "no perturbation";
      return f;
    }
    std::size_t count = 0;
    bool positive = true;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (ts[i] < f.t_a || ts[i] > f.t_b) continue;
      ++count;
      positive = positive && v[i] > 0.0;
    }
    if (count < 8 || !positive) {
      f.note = "fewer than 8 positive samples in the pre-wrap window";
      return f;
    }
    f = fit_decay(ts, v, f.t_a, f.t_b);
    if (assert_target)
      judge(f, target, sc.fit.tolerance);
    else {
      f.target = target;
      f.has_target = true;
    }
    return f;
  };
  r.fit_chi_m = do_fit(chim, sc.d * (0.5 - 1.0 / m), true);
  r.fit_M1 = do_fit(m1, sc.majorants.mu1, false);

  if (!recs.empty()) {
    r.chi_l2_initial = recs.front().chi_l2;
    for (const auto& rec : recs) r.chi_l2_max = std::max(r.chi_l2_max, rec.chi_l2);
    r.chi_bound_applies = r.chi_l2_initial >= 1e-6 * r.series.front().psi_l2;
    r.chi_bounded = r.chi_l2_max <= 2.0 * r.chi_l2_initial;
  }

  if (N > 0 && recs.size() >= 8) {
    double tail_start = recs[recs.size() - std::max<std::size_t>(3, recs.size() / 4)].t;
    r.limits = limit_parameters(recs, tail_start);
    fit_limits(r.limits, sc.fit.t_min);
  }

  // Report.
  json rep;
  rep["scenario"] = scenario_to_json(sc);
  rep["hypotheses"] = json::array();
  for (const auto& s : sc.solitons) {
    HypothesisReport h = check_hypotheses(model, s.E, sc.d);
    rep["hypotheses"].push_back({{"E", s.E},
                                 {"h0_upper", h.h0_upper},
                                 {"h0_lower", h.h0_lower},
                                 {"h1", h.h1},
                                 {"h2", h.h2},
                                 {"xi0", h.xi0},
                                 {"xi1", h.xi1}});
  }
  rep["m"] = m;
  rep["m_window_ok"] = model.m_window_ok(sc.d);
  rep["nu"] = nu;
  rep["mu2"] = sc.majorants.mu2_for(sc.d, sc.p);
  rep["smallness_N"] = r.smallness;
  rep["wrap_time"] = std::isfinite(r.wrap) ? json(r.wrap) : json(nullptr);
  rep["radiation_wrap_time"] = std::isfinite(r.radiation_wrap) ? json(r.radiation_wrap) : json(nullptr);
  json geo = json::array();
  std::size_t gi = 0;
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = j + 1; k < N; ++k, ++gi) {
      const auto& c = r.geometry[gi];
      geo.push_back({{"j", j + 1}, {"k", k + 1}, {"t0", c.t0}, {"r0", c.r0_norm}, {"eps", c.eps}, {"branch", c.branch}});
    }
  rep["geometry"] = geo;
  double eps_max = 0.0;
  for (const auto& c : r.geometry) eps_max = std::max(eps_max, c.eps);
  rep["eps_max"] = eps_max;
  rep["collision_times"] = r.collision;
  rep["records"] = recs.size();
  rep["decomposition"] = r.lost ? json{{"status", "lost"}, {"reason", r.lost_reason}} : json{{"status", "ok"}};
  rep["conservation"] = {{"max_mass_drift", r.max_mass_drift},
                         {"max_energy_drift", r.max_energy_drift},
                         {"verdict", r.max_mass_drift < 1e-10 && r.max_energy_drift < 1e-6 ? "pass" : "fail"}};
  rep["orthogonality"] = {{"max_residual_rel", r.max_residual_rel},
                          {"verdict", r.max_residual_rel < 1e-8 ? "pass" : "fail"}};
  rep["chi_l2"] = {{"initial", r.chi_l2_initial},
                   {"max", r.chi_l2_max},
                   {"verdict", !r.chi_bound_applies ? "skipped" : r.chi_bounded ? "pass" : "fail"}};
  if (!r.chi_bound_applies) rep["chi_l2"]["note"] = "initial remainder below 1e-6 ||psi||";
  rep["fit_chi_m"] = to_json(r.fit_chi_m);
  rep["fit_M1"] = to_json(r.fit_M1);
  if (!recs.empty() && N > 0) {
    json ch = json::array();
    for (std::size_t j = 0; j < N; ++j) {
      const auto& a = recs.front().sigma[j];
      const auto& b = recs.back().sigma[j];
      Vec dv(a.v.size());
      for (std::size_t c = 0; c < dv.size(); ++c) dv[c] = b.v[c] - a.v[c];
      ch.push_back({{"initial", sigma_json(a)}, {"final", sigma_json(b)}, {"dE", b.E - a.E}, {"dv", norm(dv)}});
    }
    rep["parameter_change"] = ch;
  }
  if (!r.limits.sigma_plus.empty()) {
    json lim = json::array();
    bool all = true;
    for (std::size_t j = 0; j < N; ++j) {
      lim.push_back({{"sigma_plus", sigma_json(r.limits.sigma_plus[j])},
                     {"omega_plus", r.limits.omega_plus[j]},
                     {"fit", to_json(r.limits.fits[j])},
                     {"informational_exponent", 2.0 * sc.majorants.mu1 - 1.0},
                     {"decaying", bool(r.limits.decaying[j])}});
      all = all && r.limits.decaying[j];
    }
    rep["limits"] = {{"tail_start", r.limits.tail_start}, {"solitons", lim}, {"verdict", all ? "pass" : "fail"}};
  }
  if (!r.rates.t.empty()) {
    double worst = 0.0;
    for (double x : r.rates.discrepancy)
      if (std::isfinite(x)) worst = std::max(worst, x);
    rep["rates"] = {{"max_sweep_discrepancy", worst}};
  }
  r.report = rep;
  if (!opts.out_dir.empty()) write_outputs(r, opts.out_dir);
  return r;
}

SnapshotDecomposition decompose_snapshots(const std::vector<std::string>& files, const Scenario& sc) {
  require(!files.empty(), "decompose_snapshots: no snapshot files");
  require(!sc.solitons.empty(), "decompose_snapshots: empty soliton guess");
  NonlinearityModel model = NonlinearityModel::from_config(sc.nonlinearity_kind, sc.p, sc.nonlinearity_sign);
  ProfileFamily family = ProfileFamily::build(model, sc.base_E, sc.d);
  const double m = sc.majorants.m_for(sc.p);
  const double nu = sc.majorants.nu_for(sc.d);
  DecompositionConfig dc;
  dc.tol = sc.newton_tol;
  dc.max_iters = sc.newton_max_iters;
  dc.rates = sc.rates;
  SnapshotDecomposition out;
  std::vector<SolitonParams> guess = sc.solitons;
  double guess_t = 0.0;
  for (const auto& path : files) {
    SnapshotFile snap = read_snapshot(path);
    require(snap.state.grid.d == sc.d, "decompose_snapshots: dimension mismatch in " + path);
    require(std::abs(snap.p - sc.p) < 1e-12, "decompose_snapshots: nonlinearity mismatch in " + path);
    Field chi;
    try {
      out.records.push_back(decompose_state(snap.state, guess, guess_t, family, dc, model, m, nu, chi));
    } catch (const LabError& e) {
      if (!lost_kind(e)) throw;
      out.lost = true;
      out.reason = e.what();
      break;
    }
    guess = out.records.back().sigma;
    guess_t = snap.state.t;
  }
  out.collision = finish_records(out.records, sc.solitons);
  return out;
}

DispersiveProbeResult dispersive_probe(const DispersiveProbeConfig& cfg) {
  NonlinearityModel model(cfg.p);
  ProfileFamily family = ProfileFamily::build(model, cfg.E, cfg.d);
  Grid g(cfg.d, cfg.n, cfg.L);
  LinearizedOperator op(model, family, cfg.E, g);
  NullBasis basis = build_null_basis(op);
  DispersiveProbeResult out;
  if (cfg.remove_internal_modes) {
    SpectrumOptions so;
    so.throw_on_drift = false;
    SpectrumReport rep = point_spectrum_scan(op, 0, so);
    std::vector<TwoComponentField> modes;
    for (std::size_t i = 0; i < rep.gap_eigenvalues.size(); ++i) {
      if (rep.gap_sectors[i] != 0) continue;
      cplx lam = rep.gap_eigenvalues[i];
      RadialMode mode = radial_mode(op, 0, lam, rep.n_fine, rep.R);
      modes.push_back(sample_radial_mode(mode, g, cfg.d));
      out.removed.push_back(mode.lambda);
    }
    if (!modes.empty()) extend_basis(basis, modes);
  }
  Field f(static_cast<Eigen::Index>(g.size()));
  g.for_each([&](std::size_t i, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) r2 += x[a] * x[a];
    f[static_cast<Eigen::Index>(i)] = cfg.amplitude * std::exp(-r2 / (2.0 * cfg.width * cfg.width));
  });
  TwoComponentField f0 = project_continuous(basis, TwoComponentField::from_scalar(f));
  out.initial_norm = norm2(g, f0);
  for (std::size_t k = 0; k < basis.size(); ++k)
    out.max_pairing = std::max(out.max_pairing, std::abs(basis.pair_sigma3(f0, k)) / out.initial_norm);
  EvolveOptions eo;
  eo.nu0 = cfg.nu0;
  eo.sample_every = cfg.sample_every;
  eo.projector = &basis;
  out.trajectory = evolve_linearized(op, f0, cfg.T, cfg.dt, eo);
  out.fit = fit_decay(out.trajectory.t, out.trajectory.weighted_norm, cfg.t_min, cfg.T);
  judge(out.fit, cfg.d / 2.0, cfg.tolerance);
  return out;
}

void write_records_csv(const std::vector<DecompositionRecord>& records, int d, const std::string& path) {
  std::vector<std::string> h{"t"};
  const std::size_t N = records.empty() ? 0 : records.front().sigma.size();
  for (std::size_t j = 1; j <= N; ++j) {
    std::string s = std::to_string(j);
    h.push_back("beta_" + s);
    h.push_back("E_" + s);
    for (int a = 1; a <= d; ++a) h.push_back("b_" + s + "_" + std::to_string(a));
    for (int a = 1; a <= d; ++a) h.push_back("v_" + s + "_" + std::to_string(a));
  }
  for (const char* c : {"residual", "M0", "M1", "M2", "rho", "chi_l2", "chi_lm", "newton_iters"}) h.push_back(c);
  CsvWriter w(path, h);
  for (const auto& r : records) {
    std::vector<double> row{r.t};
    for (const auto& s : r.sigma) {
      row.push_back(s.beta);
      row.push_back(s.E);
      row.insert(row.end(), s.b.begin(), s.b.end());
      row.insert(row.end(), s.v.begin(), s.v.end());
    }
    row.insert(row.end(), {r.ortho_residual, r.M0, r.M1, r.M2, r.rho, r.chi_l2, r.chi_lm, double(r.newton_iters)});
    w.row(row);
  }
}

void write_outputs(const ExperimentResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/report.json");
    out << r.report.dump(2) << '\n';
  }
  write_records_csv(r.records, r.scenario.d, dir + "/records.csv");
  {
    CsvWriter w(dir + "/series.csv", {"t", "mass", "energy", "mass_drift", "energy_drift", "psi_l2"});
    for (const auto& s : r.series) w.row({s.t, s.mass, s.energy, s.mass_drift, s.energy_drift, s.psi_l2});
  }
  {
    CsvWriter w(dir + "/plot.csv", {"t", "chi_lm", "M1", "rho"});
    for (const auto& rec : r.records) w.row({rec.t, rec.chi_lm, rec.M1, rec.rho});
  }
  {
    const int d = r.scenario.d;
    const std::size_t N = r.scenario.solitons.size();
    std::vector<std::string> h{"t"};
    for (const char* kind : {"fd", "sweep"})
      for (std::size_t j = 1; j <= N; ++j) {
        std::string s = std::string(kind) + "_" + std::to_string(j);
        h.push_back(s + "_gamma");
        h.push_back(s + "_E");
        for (int a = 1; a <= d; ++a) h.push_back(s + "_c_" + std::to_string(a));
        for (int a = 1; a <= d; ++a) h.push_back(s + "_v_" + std::to_string(a));
      }
    h.push_back("discrepancy");
    CsvWriter w(dir + "/rates.csv", h);
    const auto& rs = r.rates;
    const auto width = static_cast<Eigen::Index>(N) * block_size(d);
    for (std::size_t i = 0; i < rs.t.size(); ++i) {
      std::vector<double> row{rs.t[i]};
      row.insert(row.end(), rs.fd[i].data(), rs.fd[i].data() + width);
      if (rs.sweep[i].size() == width)
        row.insert(row.end(), rs.sweep[i].data(), rs.sweep[i].data() + width);
      else
        row.insert(row.end(), static_cast<std::size_t>(width), std::numeric_limits<double>::quiet_NaN());
      row.push_back(rs.discrepancy[i]);
      w.row(row);
    }
  }
  {
    CsvWriter w(dir + "/geometry.csv", {"j", "k", "t0", "r0", "eps", "branch"});
    std::size_t gi = 0;
    const std::size_t N = r.scenario.solitons.size();
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t k = j + 1; k < N; ++k, ++gi) {
        const auto& c = r.geometry[gi];
        w.row({double(j + 1), double(k + 1), c.t0, c.r0_norm, c.eps, double(c.branch)});
      }
  }
}

}  // namespace nlslab
