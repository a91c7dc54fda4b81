#include "myo/studies.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "myo/errors.hpp"
#include "myo/vtk.hpp"

namespace myo {

namespace fs = std::filesystem;

namespace {

double scaled_norm(const Assembler& a, const Vector& r) {
  const Vector w = a.residual_scale();
  double s = 0.0;
  for (int i : a.dofs().free()) s += (w[i] * r[i]) * (w[i] * r[i]);
  return std::sqrt(s);
}

AssemblyContext static_context(const SystemState& s) {
  AssemblyContext ctx;
  ctx.mode = Mode::quasistatic;
  ctx.activation = s.activation.empty() ? nullptr : &s.activation;
  return ctx;
}

// Runs f(0..n-1) on up to `jobs` threads; rethrows the first exception.
template <class F>
void parallel_for(int n, int jobs, F f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void check_params(const Json& params, const std::set<std::string>& allowed) {
  if (!params.is_object()) throw ConfigError("/study_params: expected an object");
  for (const auto& [key, v] : params.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' at /study_params");
}

template <class T>
T param(const Json& params, const std::string& key, T fallback) {
  if (!params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("/study_params/" + key + ": wrong value type");
  }
}

struct Artifacts {
  fs::path dir;
  const Mesh* mesh = nullptr;
  const MaterialSet* materials = nullptr;
  std::string materials_file;
  Mode mode = Mode::dynamic;
  bool checkpoint = true;
};

void write_run(const Artifacts& art, const RunResult& r) {
  fs::create_directories(art.dir);
  r.probes.write_csv((art.dir / "probes.csv").string());
  write_text(art.dir / "summary.json", r.summary().dump(2) + "\n");
  if (r.final_state.x.size() == 0) return;
  Assembler a(*art.mesh, *art.materials);
  write_vtk(a, r.final_state, (art.dir / "final.vtk").string());
  if (art.checkpoint) {
    export_mesh(*art.mesh, (art.dir / "mesh.myomesh").string());
    Checkpoint cp;
    cp.state = r.final_state;
    cp.mesh_path = "mesh.myomesh";
    cp.materials_path = art.materials_file;
    cp.mode = art.mode;
    save_checkpoint(cp, (art.dir / "final.myostate").string());
  }
}

// Attaches periodic VTK snapshots to a run.
void add_snapshots(RunSpec& spec, const fs::path& dir, int every) {
  if (every <= 0) return;
  spec.on_state = [dir, every](const Assembler& a, const SystemState& s) {
    if (s.step % every != 0) return;
    fs::create_directories(dir);
    char name[40];
    std::snprintf(name, sizeof name, "snapshot_%06ld.vtk", s.step);
    write_vtk(a, s, (dir / name).string());
  };
}

ProbeSpec tension_probe(const std::string& face) {
  ProbeSpec p;
  p.name = "force";
  p.kind = "reaction-force";
  p.selection = face;
  p.direction = Vec3::UnitX();
  p.negate = true;
  return p;
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i], b = x[i + 1];
    if ((a - at) * (b - at) <= 0.0 && a != b) return y[i] + (y[i + 1] - y[i]) * (at - a) / (b - a);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

// --- Single runs -------------------------------------------------------------

Json RunResult::summary() const {
  return {{"steps", steps},
          {"final_time", final_state.t},
          {"newton_iterations", newton_iterations},
          {"max_newton_iterations", max_newton_iterations},
          {"line_search_halvings", halvings},
          {"final_residual", final_residual},
          {"wall_time_s", wall_time},
          {"converged", converged},
          {"error", error}};
}

double probe_value(const ProbeSpec& probe, const Assembler& a, const SystemState& state,
                   const AssemblyContext& ctx, const Vector* residual) {
  if (probe.kind == "reaction-force") {
    const Vector r = residual ? *residual : a.residual(state.x, ctx);
    const double f = reaction_force(a, r, probe.selection, probe.direction);
    return probe.negate ? -f : f;
  }
  if (probe.kind == "point-displacement") {
    const PointLocation loc = locate_point(a.mesh(), probe.point);
    return point_displacement(a, state.x, loc)[probe.component];
  }
  if (probe.kind == "field-summary") {
    const FieldSummary s = field_summary(a, state.x, ctx);
    if (probe.quantity == "max_abs_J_minus_1") return s.max_abs_J_minus_1;
    if (probe.quantity == "current_volume") return s.current_volume;
    if (probe.quantity == "mean_p") return s.mean_p;
    if (probe.quantity == "mean_kinematic_p") return s.mean_kinematic_p;
    if (probe.quantity == "mean_trace_sigma") return s.mean_trace_sigma;
    throw ConfigError("unknown field-summary quantity '" + probe.quantity + "'");
  }
  if (probe.kind == "activation") return state.activation_state;
  throw ConfigError("unknown probe kind '" + probe.kind + "'");
}

RunResult run_simulation(const RunSpec& spec) {
  const auto wall0 = std::chrono::steady_clock::now();
  AssemblyOptions ao;
  ao.threads = spec.threads;
  Assembler a(*spec.mesh, *spec.materials, ao);
  Simulation sim(a, spec.boundary, spec.activation, spec.solver);

  RunResult res;
  std::vector<std::string> cols = {"t"};
  bool need_r = false;
  std::vector<PointLocation> locs(spec.probes.size());
  for (std::size_t i = 0; i < spec.probes.size(); ++i) {
    cols.push_back(spec.probes[i].name);
    if (spec.probes[i].kind == "reaction-force") need_r = true;
    if (spec.probes[i].kind == "point-displacement")
      locs[i] = locate_point(*spec.mesh, spec.probes[i].point);
  }
  res.probes = ProbeSeries(cols);

  auto record = [&](const SystemState& s, const AssemblyContext& ctx) {
    Vector r;
    if (need_r) r = a.residual(s.x, ctx);
    std::vector<double> row = {s.t};
    for (std::size_t i = 0; i < spec.probes.size(); ++i) {
      const ProbeSpec& p = spec.probes[i];
      if (p.kind == "point-displacement") row.push_back(point_displacement(a, s.x, locs[i])[p.component]);
      else row.push_back(probe_value(p, a, s, ctx, need_r ? &r : nullptr));
    }
    res.probes.add_row(std::move(row));
  };

  SystemState state = sim.initial_state();
  {
    const AssemblyContext ctx = static_context(state);
    record(state, ctx);
    res.final_residual = scaled_norm(a, a.residual(state.x, ctx));
  }
  if (spec.on_state) spec.on_state(a, state);
  res.final_state = state;

  SystemState prev = state;
  const double eps = 1e-12 * std::max(1.0, spec.time.t_end);
  auto on_step = [&](const SystemState& s, const SolveStats& st) {
    AssemblyContext ctx = static_context(s);
    if (spec.time.mode == Mode::dynamic) {
      ctx.mode = Mode::dynamic;
      ctx.dt = sim.last_dt();
      ctx.u_prev = &prev.x;
      ctx.v_prev = &prev.v;
      ctx.epsbar = sim.implicit_rate() ? nullptr : &sim.last_rates();
      ctx.implicit_rate = sim.implicit_rate();
    }
    ++res.steps;
    res.newton_iterations += st.iterations;
    res.max_newton_iterations = std::max(res.max_newton_iterations, st.iterations);
    for (int h : st.halvings) res.halvings += h;
    res.histories.push_back(st.residual_history);
    if (!st.residual_history.empty()) res.final_residual = st.residual_history.back();
    if (s.step % spec.probe_every == 0 || s.t >= spec.time.t_end - eps) record(s, ctx);
    if (spec.on_state) spec.on_state(a, s);
    res.final_state = s;
    prev = s;
  };

  try {
    sim.run(state, spec.time, on_step);
  } catch (const NonConvergence& e) {
    res.converged = false;
    res.error = e.what();
    res.histories.push_back(e.history());
  } catch (const SingularMatrix& e) {
    res.converged = false;
    res.error = e.what();
  } catch (const LinearSolveFailure& e) {
    res.converged = false;
    res.error = e.what();
  } catch (const NonPositiveJacobian& e) {
    res.converged = false;
    res.error = e.what();
  } catch (const NonPositiveDilation& e) {
    res.converged = false;
    res.error = e.what();
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return res;
}

RunSpec run_spec(const RunConfig& cfg, const Mesh& mesh, const MaterialSet& materials) {
  RunSpec s;
  s.mesh = &mesh;
  s.materials = &materials;
  s.boundary = cfg.boundary;
  s.activation = cfg.activation;
  s.time = cfg.time;
  s.solver = cfg.solver;
  s.probes = cfg.probes;
  s.threads = cfg.deterministic ? 1 : cfg.threads;
  s.probe_every = cfg.output.probe_every;
  return s;
}

// --- Isokinetic protocol -----------------------------------------------------

std::vector<double> IsokineticProtocol::marks() const {
  const double t1 = t_lengthen, t2 = t1 + t_settle, t3 = t2 + t_activate, t4 = t3 + t_settle2;
  return {t1, t2, t3, t4, t4 + (stretch - shorten_to) / std::abs(speed)};
}

ScalarProgram IsokineticProtocol::displacement() const {
  const auto m = marks();
  const double held = (stretch - 1.0) * L;
  return ScalarProgram::piecewise(
      {{0.0, 0.0}, {m[0], held}, {m[3], held}, {m[4], (shorten_to - 1.0) * L}});
}

ActivationProgram IsokineticProtocol::activation(double level) const {
  const auto m = marks();
  ActivationProgram a;
  a.kind = ActivationProgram::Kind::ramp;
  a.t_act = m[1];
  a.t_end = m[2];
  a.level = level;
  return a;
}

double IsokineticProtocol::stretch_at(double t) const { return 1.0 + displacement()(t) / L; }

BoundaryProgram roller_pull(const ScalarProgram& ux) {
  BoundaryProgram b;
  b.add("-x", 0, ScalarProgram::constant(0.0));
  b.add("-y", 1, ScalarProgram::constant(0.0));
  b.add("-z", 2, ScalarProgram::constant(0.0));
  b.add("+x", 0, ux);
  return b;
}

std::vector<double> force_at_stretches(const ForceDecomposition& d,
                                       const std::vector<double>& stretch,
                                       const std::vector<double>& at) {
  // Only the monotone shortening tail is searched.
  std::size_t start = stretch.size();
  while (start > 1 && stretch[start - 2] > stretch[start - 1]) --start;
  if (start > 0) --start;
  std::vector<double> xs(stretch.begin() + static_cast<long>(start), stretch.end());
  std::vector<double> ys(d.active.begin() + static_cast<long>(start), d.active.end());
  std::vector<double> out;
  for (double s : at) out.push_back(interp(xs, ys, s));
  return out;
}

// --- Studies -----------------------------------------------------------------

namespace {

StudyResult generic_study(const RunConfig& cfg, const StudyOptions& opt) {
  check_params(cfg.study_params, {});
  const Mesh mesh = build_mesh(cfg.mesh);
  const MaterialSet mats = build_materials(cfg);
  RunSpec spec = run_spec(cfg, mesh, mats);
  if (!opt.output_dir.empty()) add_snapshots(spec, opt.output_dir, cfg.output.snapshot_every);
  const RunResult r = run_simulation(spec);
  StudyResult out;
  out.study = cfg.study;
  out.series["probes"] = r.probes;
  out.summary["run"] = r.summary();
  out.converged = r.converged;
  if (!opt.output_dir.empty())
    write_run({opt.output_dir, &mesh, &mats, cfg.materials_file, cfg.time.mode,
               cfg.output.checkpoint},
              r);
  return out;
}

StudyResult quasi_vs_dynamic(const RunConfig& cfg, const StudyOptions& opt) {
  check_params(cfg.study_params, {"quasi_static_n_steps"});
  const Mesh mesh = build_mesh(cfg.mesh);
  const MaterialSet mats = build_materials(cfg);
  RunSpec dyn = run_spec(cfg, mesh, mats);
  dyn.time.mode = Mode::dynamic;
  RunSpec qs = dyn;
  qs.time.mode = Mode::quasistatic;
  qs.time.n_steps = param<int>(cfg.study_params, "quasi_static_n_steps", 40);
  qs.time.schedule.clear();
  if (!opt.output_dir.empty()) {
    add_snapshots(dyn, fs::path(opt.output_dir) / "dynamic", cfg.output.snapshot_every);
    add_snapshots(qs, fs::path(opt.output_dir) / "quasistatic", cfg.output.snapshot_every);
  }
  std::vector<RunResult> r(2);
  parallel_for(2, opt.jobs, [&](int i) { r[i] = run_simulation(i == 0 ? dyn : qs); });

  StudyResult out;
  out.study = cfg.study;
  out.series["dynamic"] = r[0].probes;
  out.series["quasistatic"] = r[1].probes;
  out.summary["dynamic"] = r[0].summary();
  out.summary["quasistatic"] = r[1].summary();
  out.converged = r[0].converged && r[1].converged;
  Json finals = Json::object();
  for (const auto& p : cfg.probes) {
    const double a = r[0].probes.column(p.name).back(), b = r[1].probes.column(p.name).back();
    finals[p.name] = {{"dynamic", a}, {"quasistatic", b},
                      {"relative_difference", std::abs(a - b) / std::max(std::abs(b), 1e-300)}};
  }
  out.summary["final_values"] = finals;
  if (!opt.output_dir.empty()) {
    const fs::path dir(opt.output_dir);
    write_run({dir / "dynamic", &mesh, &mats, cfg.materials_file, Mode::dynamic,
               cfg.output.checkpoint}, r[0]);
    write_run({dir / "quasistatic", &mesh, &mats, cfg.materials_file, Mode::quasistatic,
               cfg.output.checkpoint}, r[1]);
  }
  return out;
}

StudyResult isokinetic(const RunConfig& cfg, const StudyOptions& opt) {
  const Json& sp = cfg.study_params;
  check_params(sp, {"speeds", "stretch", "shorten_to", "t_lengthen", "t_settle", "t_activate",
                    "t_settle2", "compare_stretches"});
  const Mesh mesh = build_mesh(cfg.mesh);
  const MaterialSet mats = build_materials(cfg);
  const Vec3 ext = mesh.bbox_max() - mesh.bbox_min();
  const std::vector<double> speeds = param<std::vector<double>>(sp, "speeds", {-1.0, -2.0, -4.0});
  const std::vector<double> compare =
      param<std::vector<double>>(sp, "compare_stretches", {1.08, 1.06, 1.04});
  IsokineticProtocol base;
  base.L = ext[0];
  base.stretch = param<double>(sp, "stretch", 1.1);
  base.shorten_to = param<double>(sp, "shorten_to", 1.0);
  base.t_lengthen = param<double>(sp, "t_lengthen", 0.1);
  base.t_settle = param<double>(sp, "t_settle", 0.05);
  base.t_activate = param<double>(sp, "t_activate", 0.25);
  base.t_settle2 = param<double>(sp, "t_settle2", 0.05);
  for (double v : speeds)
    if (!(v < 0.0)) throw ConfigError("/study_params/speeds: shortening speeds must be negative");
  if (!(base.shorten_to < base.stretch))
    throw ConfigError("/study_params/shorten_to: must be below stretch");
  const double level = cfg.activation.kind == ActivationProgram::Kind::none ? 1.0
                                                                            : cfg.activation.level;

  const int n = static_cast<int>(speeds.size());
  std::vector<IsokineticProtocol> proto(n, base);
  std::vector<RunSpec> specs;
  for (int i = 0; i < n; ++i) {
    proto[i].speed = speeds[i];
    RunSpec s = run_spec(cfg, mesh, mats);
    s.boundary = roller_pull(proto[i].displacement());
    s.time.t_end = proto[i].marks().back();
    s.time.breakpoints = proto[i].marks();
    s.probes = {tension_probe("+x")};
    s.probe_every = 1;
    s.activation = proto[i].activation(level);
    specs.push_back(s);
    s.activation = ActivationProgram{};
    specs.push_back(s);
  }
  std::vector<RunResult> runs(specs.size());
  parallel_for(static_cast<int>(specs.size()), opt.jobs,
               [&](int i) { runs[i] = run_simulation(specs[i]); });

  StudyResult out;
  out.study = cfg.study;
  const TissueParams& muscle = mats.at("muscle");
  const double lam = base.stretch;
  const double iso_oracle = muscle.fibre_weight() * muscle.sigma0 *
                            active_force_length(lam, muscle.c_sarco, mats.curves) * ext[1] *
                            ext[2] / lam;
  out.summary["isometric_oracle"] = iso_oracle;
  Json per_speed = Json::array();
  std::vector<std::vector<double>> at(n);
  for (int i = 0; i < n; ++i) {
    const RunResult& act = runs[2 * i];
    const RunResult& pas = runs[2 * i + 1];
    Json entry = {{"speed", speeds[i]}, {"active_run", act.summary()}, {"passive_run", pas.summary()}};
    if (!act.converged || !pas.converged) {
      out.converged = false;
      per_speed.push_back(entry);
      continue;
    }
    const ForceDecomposition d = effective_force_decomposition(act.probes, pas.probes, "force");
    std::vector<double> stretch;
    for (double t : d.t) stretch.push_back(proto[i].stretch_at(t));
    ProbeSeries ser({"t", "stretch", "total", "passive", "active"});
    for (std::size_t k = 0; k < d.t.size(); ++k)
      ser.add_row({d.t[k], stretch[k], d.total[k], d.passive[k], d.active[k]});
    char key[32];
    std::snprintf(key, sizeof key, "speed_%g", speeds[i]);
    out.series[key] = ser;
    at[i] = force_at_stretches(d, stretch, compare);
    const double t_iso = proto[i].marks()[3];
    entry["isometric_force"] = interp(d.t, d.active, t_iso);
    entry["active_at_stretch"] = at[i];
    per_speed.push_back(entry);
  }
  out.summary["compare_stretches"] = compare;
  out.summary["speeds"] = per_speed;
  if (out.converged) {
    bool mono = true;
    for (std::size_t k = 0; k < compare.size(); ++k)
      for (int i = 0; i + 1 < n; ++i)
        if (!(std::abs(speeds[i + 1]) > std::abs(speeds[i]) ? at[i + 1][k] < at[i][k]
                                                             : at[i + 1][k] > at[i][k]))
          mono = false;
    out.summary["monotone_in_speed"] = mono;
  }
  if (!opt.output_dir.empty()) {
    const fs::path dir(opt.output_dir);
    fs::create_directories(dir);
    for (const auto& [name, s] : out.series) s.write_csv((dir / (name + ".csv")).string());
    for (int i = 0; i < n; ++i) {
      char sub[48];
      std::snprintf(sub, sizeof sub, "speed_%g", speeds[i]);
      write_run({dir / sub / "active", &mesh, &mats, cfg.materials_file, cfg.time.mode,
                 cfg.output.checkpoint}, runs[2 * i]);
      write_run({dir / sub / "passive", &mesh, &mats, cfg.materials_file, cfg.time.mode,
                 cfg.output.checkpoint}, runs[2 * i + 1]);
    }
  }
  return out;
}

StudyResult cp_force_length(const RunConfig& cfg, const StudyOptions& opt) {
  const Json& sp = cfg.study_params;
  check_params(sp, {"steps_per_phase", "pcsa_factor", "active_stretches", "variants",
                    "passive_mesh", "passive_stretches", "passive_alphas", "passive_steps",
                    "fixed_face", "pulled_face"});
  const int steps = param<int>(sp, "steps_per_phase", 4);
  const double pcsa = param<double>(sp, "pcsa_factor", 0.7);
  const auto stretches = param<std::vector<double>>(sp, "active_stretches", {1.0});
  const std::string fixed_face = param<std::string>(sp, "fixed_face", "apo_bottom_-x");
  const std::string pulled_face = param<std::string>(sp, "pulled_face", "apo_top_+x");
  if (steps < 1) throw ConfigError("/study_params/steps_per_phase: must be at least 1");
  if (!(pcsa > 0.0 && pcsa <= 1.0)) throw ConfigError("/study_params/pcsa_factor: must lie in (0, 1]");

  struct Variant {
    std::string name;
    Json overrides;
  };
  std::vector<Variant> variants;
  const Json vs = sp.contains("variants") ? sp.at("variants") : Json::array();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string where = "/study_params/variants/" + std::to_string(i);
    Variant v;
    v.overrides = cfg.material_overrides;
    for (const auto& [key, val] : vs[i].items()) {
      if (key == "name") v.name = val.get<std::string>();
      else if (key == "alpha" || key == "beta" || key == "c_sarco") v.overrides["muscle." + key] = val;
      else throw ConfigError("unknown key '" + key + "' at " + where);
    }
    if (v.name.empty()) v.name = "variant" + std::to_string(i);
    variants.push_back(v);
  }

  // Geometries: as configured, and with the cross-section scaled to pcsa.
  MeshSource reduced_src = cfg.mesh;
  reduced_src.scale = cfg.mesh.scale.cwiseProduct(Vec3(1.0, std::sqrt(pcsa), std::sqrt(pcsa)));
  const std::vector<Mesh> meshes = {build_mesh(cfg.mesh), build_mesh(reduced_src)};
  for (const auto& m : meshes)
    for (const auto& f : {fixed_face, pulled_face})
      if (!m.has_selection(f)) throw ConfigError("/study_params: mesh has no set '" + f + "'");

  std::vector<MaterialSet> mats;
  for (const auto& v : variants) {
    MaterialSet m = cfg.materials_file.empty() ? load_materials(bundled_materials_path())
                                               : load_materials(cfg.materials_file);
    apply_material_overrides(m, v.overrides);
    mats.push_back(m);
  }
  const double level = cfg.activation.kind == ActivationProgram::Kind::none ? 1.0
                                                                            : cfg.activation.level;

  struct Job {
    int variant, geometry;
    double stretch;
  };
  std::vector<Job> jobs;
  for (int v = 0; v < static_cast<int>(variants.size()); ++v)
    for (double s : stretches)
      for (int g = 0; g < 2; ++g) jobs.push_back({v, g, s});

  std::vector<RunResult> runs(jobs.size());
  std::vector<RunSpec> specs;
  for (const Job& j : jobs) {
    const Mesh& m = meshes[j.geometry];
    const double L = m.bbox_max()[0] - m.bbox_min()[0];
    RunSpec s = run_spec(cfg, m, mats[j.variant]);
    s.boundary = BoundaryProgram{};
    s.boundary.fix(fixed_face);
    s.boundary.add(pulled_face, 0,
                   ScalarProgram::piecewise({{0.0, 0.0}, {1.0, (j.stretch - 1.0) * L}}));
    s.boundary.add(pulled_face, 1, ScalarProgram::constant(0.0));
    s.boundary.add(pulled_face, 2, ScalarProgram::constant(0.0));
    s.activation = ActivationProgram{};
    s.activation.kind = ActivationProgram::Kind::ramp;
    s.activation.t_act = 1.0;
    s.activation.t_end = 2.0;
    s.activation.level = level;
    s.time = TimeConfig{};
    s.time.mode = Mode::quasistatic;
    s.time.t_end = 2.0;
    s.time.n_steps = 2 * steps;
    s.time.breakpoints = {1.0};
    s.probes = {tension_probe(pulled_face)};
    s.probe_every = 1;
    specs.push_back(s);
  }
  parallel_for(static_cast<int>(specs.size()), opt.jobs,
               [&](int i) { runs[i] = run_simulation(specs[i]); });

  StudyResult out;
  out.study = cfg.study;
  ProbeSeries active({"variant", "stretch", "force_full", "force_reduced", "ratio"});
  Json vsum = Json::array();
  auto active_force = [](const RunResult& r) {
    const auto t = r.probes.column("t"), f = r.probes.column("force");
    return interp(t, f, 2.0) - interp(t, f, 1.0);
  };
  for (std::size_t k = 0; k + 1 < jobs.size(); k += 2) {
    const Job& j = jobs[k];
    Json e = {{"variant", variants[j.variant].name},
              {"stretch", j.stretch},
              {"full_run", runs[k].summary()},
              {"reduced_run", runs[k + 1].summary()}};
    if (runs[k].converged && runs[k + 1].converged) {
      const double full = active_force(runs[k]), red = active_force(runs[k + 1]);
      e["force_full"] = full;
      e["force_reduced"] = red;
      e["ratio"] = red / full;
      active.add_row({static_cast<double>(j.variant), j.stretch, full, red, red / full});
    } else {
      out.converged = false;
    }
    vsum.push_back(e);
  }
  out.series["cp_active"] = active;
  out.summary["pcsa_factor"] = pcsa;
  out.summary["active"] = vsum;

  // Passive block sweep over the ECM fraction.
  if (sp.contains("passive_mesh")) {
    const MeshSource psrc = parse_mesh_source(sp.at("passive_mesh"), "/study_params/passive_mesh");
    const Mesh pmesh = build_mesh(psrc);
    const double L = pmesh.bbox_max()[0] - pmesh.bbox_min()[0];
    const auto alphas = param<std::vector<double>>(sp, "passive_alphas", {0.02, 0.4});
    auto pst = param<std::vector<double>>(sp, "passive_stretches", {1.3});
    std::sort(pst.begin(), pst.end());
    const double smax = pst.back();
    if (!(smax > 1.0)) throw ConfigError("/study_params/passive_stretches: need a stretch above 1");
    std::vector<double> marks;
    for (double s : pst) marks.push_back((s - 1.0) / (smax - 1.0));
    std::vector<MaterialSet> pm;
    for (double a : alphas) {
      Json ov = cfg.material_overrides;
      ov["muscle.alpha"] = a;
      MaterialSet m = cfg.materials_file.empty() ? load_materials(bundled_materials_path())
                                                 : load_materials(cfg.materials_file);
      apply_material_overrides(m, ov);
      pm.push_back(m);
    }
    std::vector<RunResult> pr(alphas.size());
    parallel_for(static_cast<int>(alphas.size()), opt.jobs, [&](int i) {
      RunSpec s = run_spec(cfg, pmesh, pm[i]);
      s.boundary = roller_pull(ScalarProgram::ramp(0.0, 1.0, (smax - 1.0) * L));
      s.activation = ActivationProgram{};
      s.time = TimeConfig{};
      s.time.mode = Mode::quasistatic;
      s.time.t_end = 1.0;
      s.time.n_steps = param<int>(sp, "passive_steps", 6);
      s.time.breakpoints = marks;
      s.probes = {tension_probe("+x")};
      s.probe_every = 1;
      pr[i] = run_simulation(s);
    });
    ProbeSeries passive({"alpha", "stretch", "force"});
    Json psum = Json::array();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      Json e = {{"alpha", alphas[i]}, {"run", pr[i].summary()}};
      if (pr[i].converged) {
        const auto t = pr[i].probes.column("t"), f = pr[i].probes.column("force");
        std::vector<double> fs;
        for (std::size_t k = 0; k < pst.size(); ++k) {
          fs.push_back(interp(t, f, marks[k]));
          passive.add_row({alphas[i], pst[k], fs.back()});
        }
        e["force"] = fs;
      } else {
        out.converged = false;
      }
      psum.push_back(e);
    }
    out.series["cp_passive"] = passive;
    out.summary["passive_stretches"] = pst;
    out.summary["passive"] = psum;
  }

  if (!opt.output_dir.empty()) {
    const fs::path dir(opt.output_dir);
    fs::create_directories(dir);
    for (const auto& [name, s] : out.series) s.write_csv((dir / (name + ".csv")).string());
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      char sub[96];
      std::snprintf(sub, sizeof sub, "%s_stretch_%g_%s", variants[jobs[k].variant].name.c_str(),
                    jobs[k].stretch, jobs[k].geometry == 0 ? "full" : "reduced");
      write_run({dir / sub, &meshes[jobs[k].geometry], &mats[jobs[k].variant], cfg.materials_file,
                 Mode::quasistatic, cfg.output.checkpoint},
                runs[k]);
    }
  }
  return out;
}

}  // namespace

StudyResult run_study(const RunConfig& cfg, const StudyOptions& opt) {
  StudyResult r;
  if (cfg.study == "quasi-vs-dynamic") r = quasi_vs_dynamic(cfg, opt);
  else if (cfg.study == "isokinetic") r = isokinetic(cfg, opt);
  else if (cfg.study == "cp-force-length") r = cp_force_length(cfg, opt);
  else r = generic_study(cfg, opt);
  r.summary["study"] = cfg.study;
  r.summary["converged"] = r.converged;
  if (!opt.output_dir.empty()) {
    const fs::path dir(opt.output_dir);
    fs::create_directories(dir);
    write_text(dir / "summary.json", r.summary.dump(2) + "\n");
    write_text(dir / "resolved_config.json", cfg.resolved.dump(2) + "\n");
  }
  return r;
}

}  // namespace myo
