#include "myo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "myo/errors.hpp"
#include "myo/probes.hpp"

namespace myo {

namespace {

// Read-tracking view of a JSON object: every key must be consumed.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where() + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    used_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where() + "/" + key + ": wrong value type");
    }
  }

  double length(const std::string& key, double fallback) {
    if (!j_.contains(key)) return fallback;
    used_.insert(key);
    return parse_length(j_.at(key), where() + "/" + key);
  }

  void finish() const {
    for (const auto& [key, v] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' at " + where());
  }

  std::string where() const { return path_.empty() ? "/" : path_; }
  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Vec3 vec3(const Json& v, const std::string& where, bool lengths) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": expected three values");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (lengths) out[i] = parse_length(v[i], where);
    else if (v[i].is_number()) out[i] = v[i].get<double>();
    else throw ConfigError(where + ": expected numbers");
  }
  return out;
}

void merge(Json& base, const Json& over) {
  for (const auto& [k, v] : over.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) merge(base[k], v);
    else base[k] = v;
  }
}

// --- Presets ---------------------------------------------------------------

Json block_mesh(const Json& divisions) {
  return {{"generator", "block"},
          {"L", "52.0008mm"},
          {"W", "13.75mm"},
          {"H", "5.5783mm"},
          {"divisions", divisions},
          {"element", "Q2"}};
}

Json gastroc_mesh(const Json& divisions) {
  return {{"generator", "gastroc"},
          {"L_apo", "52.0008mm"},
          {"lambda0", "16.25mm"},
          {"theta0_deg", 20.0},
          {"L_mus", "67.5mm"},
          {"T_apo", "0.75mm"},
          {"W_mus", "13.75mm"},
          {"f_apo", 0.75},
          {"divisions", divisions},
          {"element", "Q2"}};
}

Json fixed(const std::string& sel) {
  return {{"selection", sel}, {"components", "all"}, {"program", {{"kind", "constant"}, {"value", 0.0}}}};
}

Json centreline_probe(const std::string& name, double fx) {
  return {{"name", name}, {"kind", "point-displacement"}, {"point_rel", {fx, 0.5, 0.5}},
          {"component", 0}};
}

Json tension_probe() {
  return {{"name", "force"}, {"kind", "reaction-force"}, {"selection", "+x"},
          {"direction", {1.0, 0.0, 0.0}}, {"negate", true}};
}

Json pull_preset(const std::string& study) {
  Json j;
  j["study"] = study;
  j["mesh"] = block_mesh({8, 2, 1});
  j["boundary"] = Json::array(
      {fixed("-x"),
       {{"selection", "+x"}, {"components", "x"},
        {"program", {{"kind", "ramp"}, {"t0", 0.05}, {"t1", 0.15}, {"rate_L", 0.1}}}},
       {{"selection", "+x"}, {"components", {"y", "z"}},
        {"program", {{"kind", "constant"}, {"value", 0.0}}}}});
  j["activation"] = {{"kind", "none"}};
  j["time"] = {{"mode", "dynamic"},
               {"dt", 1e-3},
               {"t_end", 0.2},
               {"C_max", 0.5},
               {"schedule", Json::array({{{"t_start", 0.05}, {"t_end", 0.051}, {"dt", 1e-5}}})},
               {"breakpoints", {0.05, 0.15}}};
  j["probes"] = Json::array({centreline_probe("x_L", 1.0), centreline_probe("x1", 0.9),
                             centreline_probe("x_mid", 0.5), centreline_probe("x2", 0.1),
                             tension_probe(),
                             {{"name", "max_abs_J_minus_1"}, {"kind", "field-summary"},
                              {"quantity", "max_abs_J_minus_1"}}});
  return j;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"dynamic-pull", "quasi-vs-dynamic", "isokinetic", "cp-force-length", "cyclic",
          "gastroc-activate"};
}

Json preset(const std::string& name) {
  if (name == "dynamic-pull") return pull_preset("dynamic-pull");
  if (name == "quasi-vs-dynamic") {
    Json j = pull_preset("quasi-vs-dynamic");
    j["study_params"] = {{"quasi_static_n_steps", 40}};
    return j;
  }
  if (name == "isokinetic") {
    Json j;
    j["study"] = "isokinetic";
    j["mesh"] = block_mesh({4, 1, 1});
    j["activation"] = {{"kind", "ramp"}, {"level", 1.0}};
    j["materials"] = {{"overrides", {{"curves.continuous_force_velocity", true}}}};
    j["time"] = {{"mode", "dynamic"}, {"dt", 1e-3}, {"C_max", 0.5}, {"rate", "implicit"}};
    j["probes"] = Json::array({tension_probe()});
    j["study_params"] = {{"speeds", {-1.0, -2.0, -4.0}},
                         {"stretch", 1.1},
                         {"shorten_to", 1.0},
                         {"t_lengthen", 0.1},
                         {"t_settle", 0.05},
                         {"t_activate", 0.25},
                         {"t_settle2", 0.05},
                         {"compare_stretches", {1.08, 1.06, 1.04}}};
    return j;
  }
  if (name == "cp-force-length") {
    Json j;
    j["study"] = "cp-force-length";
    j["mesh"] = gastroc_mesh({4, 1, 2});
    // ECM ten times stiffer than the tabulated muscle set; cells scaled so
    // the typical (alpha = 0.02) mixture reproduces the tabulated set.
    j["materials"] = {{"overrides",
                       {{"muscle.yeoh_ecm", {37030.0, -7077.0, 1232.0}},
                        {"muscle.yeoh_cell", {3703.0 * 0.8 / 0.98, -707.7 * 0.8 / 0.98,
                                              123.2 * 0.8 / 0.98}},
                        {"curves.regularize_toe", true}}}};
    j["activation"] = {{"kind", "ramp"}, {"level", 1.0}};
    j["time"] = {{"mode", "quasistatic"}};
    j["probes"] = Json::array({tension_probe()});
    j["study_params"] = {
        {"steps_per_phase", 4},
        {"pcsa_factor", 0.7},
        {"active_stretches", {1.0}},
        {"variants",
         Json::array({{{"name", "TD"}, {"alpha", 0.02}, {"beta", 0.1}, {"c_sarco", 0.0}},
                      {{"name", "CP"}, {"alpha", 0.4}, {"beta", 0.2}, {"c_sarco", 0.0}}})},
        {"passive_mesh", block_mesh({4, 1, 1})},
        {"passive_stretches", {1.1, 1.2, 1.3}},
        {"passive_alphas", {0.02, 0.1, 0.2, 0.4}},
        {"passive_steps", 6}};
    return j;
  }
  if (name == "cyclic") {
    Json j;
    j["study"] = "cyclic";
    j["mesh"] = block_mesh({4, 1, 1});
    j["boundary"] = Json::array(
        {fixed("-x"),
         {{"selection", "+x"}, {"components", "x"},
          {"program", {{"kind", "sinusoid"}, {"amplitude_L", 0.01}, {"frequency", 2.0}}}},
         {{"selection", "+x"}, {"components", {"y", "z"}},
          {"program", {{"kind", "constant"}, {"value", 0.0}}}}});
    j["materials"] = {{"overrides", {{"curves.continuous_force_velocity", true}}}};
    j["activation"] = {{"kind", "square-wave"}, {"t_act", 0.0}, {"period", 0.5}, {"duty", 0.5},
                       {"tau_act", 0.01}, {"beta_deact", 0.5}};
    j["time"] = {{"mode", "dynamic"}, {"dt", 1e-3}, {"t_end", 1.0}, {"C_max", 0.5}};
    j["probes"] = Json::array({tension_probe(), centreline_probe("x_mid", 0.5),
                               {{"name", "activation"}, {"kind", "activation"}}});
    return j;
  }
  if (name == "gastroc-activate") {
    Json j;
    j["study"] = "gastroc-activate";
    j["mesh"] = gastroc_mesh({4, 1, 2});
    j["boundary"] = Json::array(
        {fixed("-x"),
         {{"selection", "+x"}, {"components", "x"},
          {"program", {{"kind", "table"}, {"points_L", {{0.0, 0.0}, {0.5, 0.1}}}}}},
         {{"selection", "+x"}, {"components", {"y", "z"}},
          {"program", {{"kind", "constant"}, {"value", 0.0}}}}});
    j["materials"] = {{"overrides", {{"curves.regularize_toe", true}}}};
    j["activation"] = {{"kind", "ramp"}, {"t_act", 0.5}, {"t_end", 1.0}, {"level", 1.0}};
    j["time"] = {{"mode", "quasistatic"}, {"t_end", 1.0}, {"n_steps", 10}};
    j["probes"] = Json::array(
        {tension_probe(),
         {{"name", "uz_mid"}, {"kind", "point-displacement"}, {"point_rel", {0.5, 0.5, 0.5}},
          {"component", 2}}});
    return j;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  // Material overrides keep their dotted keys: materials.overrides.muscle.alpha
  const std::string mo = "materials.overrides.";
  if (path.rfind(mo, 0) == 0) {
    doc["materials"]["overrides"][path.substr(mo.size())] = value;
    return;
  }
  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError("override '" + assignment + "': '" + key + "' is not an index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + assignment + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null())
        throw ConfigError("override '" + assignment + "': '" + key + "' is not inside an object");
      node = &(*node)[key];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

double parse_length(const Json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ConfigError(where + ": expected a length");
  const std::string s = v.get<std::string>();
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": bad length '" + s + "'");
  }
  std::string unit = s.substr(used);
  while (!unit.empty() && unit.front() == ' ') unit.erase(unit.begin());
  if (unit == "m" || unit.empty()) return x;
  if (unit == "mm") return x * 1e-3;
  if (unit == "cm") return x * 1e-2;
  throw ConfigError(where + ": unknown length unit '" + unit + "'");
}

namespace {

}  // namespace

MeshSource parse_mesh_source(const Json& j, const std::string& where) {
  Obj o(j, where);
  MeshSource m;
  m.generator = o.get<std::string>("generator", "block");
  const std::string el = o.get<std::string>("element", "Q2");
  if (el == "Q2") m.element = BasisKind::Q2;
  else if (el == "Q1") m.element = BasisKind::Q1;
  else throw ConfigError(where + "/element: expected Q1 or Q2");
  if (o.has("divisions")) {
    const Json& d = o.at("divisions");
    if (!d.is_array() || d.size() != 3) throw ConfigError(where + "/divisions: expected [nx, ny, nz]");
    m.divisions = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
  }
  if (o.has("scale")) m.scale = vec3(o.at("scale"), where + "/scale", false);
  m.fibres = o.get<bool>("fibres", true);
  if (m.generator == "block") {
    m.block.L = o.length("L", m.block.L);
    m.block.W = o.length("W", m.block.W);
    m.block.H = o.length("H", m.block.H);
    m.fibre_angle = o.get<double>("fibre_angle_deg", 0.0) * M_PI / 180.0;
  } else if (m.generator == "gastroc") {
    auto& g = m.gastroc;
    g.L_apo = o.length("L_apo", g.L_apo);
    g.lambda0 = o.length("lambda0", g.lambda0);
    g.theta0 = o.get<double>("theta0_deg", g.theta0 * 180.0 / M_PI) * M_PI / 180.0;
    g.L_mus = o.length("L_mus", g.L_mus);
    g.T_apo = o.length("T_apo", g.T_apo);
    g.W_mus = o.length("W_mus", g.W_mus);
    if (o.has("gamma0_deg")) g.gamma0 = o.get<double>("gamma0_deg", 0.0) * M_PI / 180.0;
    if (o.has("height")) g.height = o.length("height", 0.0);
    g.f_apo = o.get<double>("f_apo", g.f_apo);
    m.apo_layers = o.get<int>("apo_layers", 1);
  } else if (m.generator == "file") {
    m.path = o.get<std::string>("path", "");
    m.auto_normalize = o.get<bool>("auto_normalize", false);
    if (m.path.empty()) throw ConfigError(where + "/path: required for generator 'file'");
  } else {
    throw ConfigError(where + "/generator: expected block, gastroc or file");
  }
  o.finish();
  return m;
}

namespace {

std::vector<int> parse_components(const Json& j, const std::string& where) {
  auto one = [&](const Json& c) {
    if (c.is_number_integer()) {
      const int v = c.get<int>();
      if (v < 0 || v > 2) throw ConfigError(where + ": component out of range");
      return v;
    }
    if (c.is_string()) {
      const std::string s = c.get<std::string>();
      if (s == "x") return 0;
      if (s == "y") return 1;
      if (s == "z") return 2;
    }
    throw ConfigError(where + ": components are x, y, z or 0..2");
  };
  if (j.is_string() && j.get<std::string>() == "all") return {0, 1, 2};
  if (j.is_array()) {
    std::vector<int> out;
    for (const auto& c : j) out.push_back(one(c));
    return out;
  }
  return {one(j)};
}

// Values with an "_L" suffix are multiples of the reference length.
double scaled(Obj& o, const std::string& key, double L, double fallback) {
  if (o.has(key + "_L")) return o.get<double>(key + "_L", 0.0) * L;
  if (!o.has(key)) return fallback;
  return o.length(key, fallback);
}

ScalarProgram parse_program(const Json& j, const std::string& where, double L) {
  Obj o(j, where);
  const std::string kind = o.get<std::string>("kind", "constant");
  ScalarProgram p;
  if (kind == "constant") {
    p = ScalarProgram::constant(scaled(o, "value", L, 0.0));
  } else if (kind == "ramp") {
    p = ScalarProgram::ramp(o.get<double>("t0", 0.0), o.get<double>("t1", 0.0),
                            scaled(o, "rate", L, 0.0));
    if (!(p.t1 >= p.t0)) throw ConfigError(where + ": ramp needs t1 >= t0");
  } else if (kind == "sinusoid") {
    p = ScalarProgram::sinusoid(scaled(o, "amplitude", L, 0.0), o.get<double>("frequency", 1.0));
  } else if (kind == "velocity") {
    p = ScalarProgram::velocity(o.get<double>("t0", 0.0), scaled(o, "rate", L, 0.0));
  } else if (kind == "table") {
    const bool rel = o.has("points_L");
    const Json& pts = o.at(rel ? "points_L" : "points");
    std::vector<std::pair<double, double>> table;
    for (const auto& pt : pts) {
      if (!pt.is_array() || pt.size() != 2) throw ConfigError(where + ": points are [t, value] pairs");
      const double v = rel ? pt[1].get<double>() * L : parse_length(pt[1], where);
      table.emplace_back(pt[0].get<double>(), v);
    }
    p = ScalarProgram::piecewise(std::move(table));
  } else {
    throw ConfigError(where + "/kind: unknown program kind '" + kind + "'");
  }
  o.finish();
  return p;
}

ActivationProgram parse_activation(const Json& j) {
  Obj o(j, "/activation");
  ActivationProgram a;
  const std::string kind = o.get<std::string>("kind", "none");
  if (kind == "none") a.kind = ActivationProgram::Kind::none;
  else if (kind == "ramp") a.kind = ActivationProgram::Kind::ramp;
  else if (kind == "hold") a.kind = ActivationProgram::Kind::hold;
  else if (kind == "zajac") a.kind = ActivationProgram::Kind::zajac;
  else if (kind == "square-wave") a.kind = ActivationProgram::Kind::square_wave;
  else throw ConfigError("/activation/kind: unknown kind '" + kind + "'");
  a.t_act = o.get<double>("t_act", 0.0);
  a.t_end = o.get<double>("t_end", a.kind == ActivationProgram::Kind::ramp ? a.t_act + 0.1 : 0.0);
  a.level = o.get<double>("level", 1.0);
  a.tau_act = o.get<double>("tau_act", a.tau_act);
  a.beta_deact = o.get<double>("beta_deact", a.beta_deact);
  a.period = o.get<double>("period", a.period);
  a.duty = o.get<double>("duty", a.duty);
  if (o.has("excitation")) a.excitation = parse_program(o.at("excitation"), "/activation/excitation", 1.0);
  if (o.has("regions")) a.regions = o.get<std::vector<std::string>>("regions", {});
  o.finish();
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("/activation: ") + e.what());
  }
  return a;
}

TimeConfig parse_time(const Json& j) {
  Obj o(j, "/time");
  TimeConfig t;
  const std::string mode = o.get<std::string>("mode", "dynamic");
  if (mode == "dynamic") t.mode = Mode::dynamic;
  else if (mode == "quasistatic") t.mode = Mode::quasistatic;
  else throw ConfigError("/time/mode: expected dynamic or quasistatic");
  t.dt_in = o.get<double>("dt", 1e-5);
  t.t_end = o.get<double>("t_end", 0.0);
  t.C_max = o.get<double>("C_max", 0.5);
  t.n_steps = o.get<int>("n_steps", 10);
  t.output_every = o.get<int>("output_every", 1);
  const std::string rate = o.get<std::string>("rate", "lagged");
  if (rate == "implicit") t.implicit_rate = true;
  else if (rate != "lagged") throw ConfigError("/time/rate: expected lagged or implicit");
  t.breakpoints = o.get<std::vector<double>>("breakpoints", {});
  if (o.has("schedule")) {
    const Json& s = o.at("schedule");
    if (!s.is_array()) throw ConfigError("/time/schedule: expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      Obj w(s[i], "/time/schedule/" + std::to_string(i));
      t.schedule.push_back({w.get<double>("t_start", 0.0), w.get<double>("t_end", 0.0),
                            w.get<double>("dt", 0.0)});
      w.finish();
    }
  }
  o.finish();
  t.validate();
  return t;
}

NewtonConfig parse_solver(const Json& j) {
  Obj o(j, "/solver");
  NewtonConfig n;
  n.abs_tol = o.get<double>("abs_tol", n.abs_tol);
  n.rel_tol = o.get<double>("rel_tol", n.rel_tol);
  n.max_iters = o.get<int>("max_iters", n.max_iters);
  n.max_halvings = o.get<int>("max_halvings", n.max_halvings);
  const std::string lin = o.get<std::string>("linear", "direct");
  if (lin == "direct") n.linear.kind = LinearSolverKind::sparse_direct;
  else if (lin == "minres") n.linear.kind = LinearSolverKind::iterative;
  else throw ConfigError("/solver/linear: expected direct or minres");
  n.linear.iterative_tol = o.get<double>("linear_tol", n.linear.iterative_tol);
  n.linear.iterative_max_iters = o.get<int>("linear_max_iters", n.linear.iterative_max_iters);
  o.finish();
  n.validate();
  return n;
}

const std::set<std::string>& tissue_keys() {
  static const std::set<std::string> keys = {
      "kappa", "kappa_ecm", "kappa_cell", "kappa_fat", "alpha", "beta", "yeoh", "yeoh_ecm",
      "yeoh_cell", "c_fat", "sigma0", "epsbar0", "c_sarco", "shift_passive", "rho0"};
  return keys;
}

}  // namespace

void apply_material_overrides(MaterialSet& m, const Json& overrides) {
  if (!overrides.is_object()) throw ConfigError("/materials/overrides: expected an object");
  std::set<std::string> kappa_set;
  for (const auto& [key, value] : overrides.items()) {
    const std::string where = "/materials/overrides/" + key;
    if (key == "curves.regularize_toe") {
      if (!value.is_boolean()) throw ConfigError(where + ": expected true/false");
      m.curves.regularize_toe = value.get<bool>();
      continue;
    }
    if (key == "curves.continuous_force_velocity") {
      if (!value.is_boolean()) throw ConfigError(where + ": expected true/false");
      m.curves.continuous_force_velocity = value.get<bool>();
      if (value.get<bool>()) m.curves.force_velocity = m.curves.force_velocity.made_continuous();
      continue;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("unknown key '" + key + "' at /materials/overrides");
    const std::string region = key.substr(0, dot), field = key.substr(dot + 1);
    auto it = m.regions.find(region);
    if (it == m.regions.end() || !tissue_keys().count(field))
      throw ConfigError("unknown key '" + key + "' at /materials/overrides");
    TissueParams& t = it->second;
    auto num = [&]() {
      if (!value.is_number()) throw ConfigError(where + ": expected a number");
      return value.get<double>();
    };
    auto coeffs = [&]() {
      if (!value.is_array() || value.empty() || value.size() > 3)
        throw ConfigError(where + ": expected 1-3 coefficients");
      std::vector<double> c = value.get<std::vector<double>>();
      c.resize(3, 0.0);
      return YeohCoeffs{c[0], c[1], c[2]};
    };
    if (field == "kappa") { t.kappa = num(); kappa_set.insert(region); }
    else if (field == "kappa_ecm") t.kappa_ecm = num();
    else if (field == "kappa_cell") t.kappa_cell = num();
    else if (field == "kappa_fat") t.kappa_fat = num();
    else if (field == "alpha") t.alpha = num();
    else if (field == "beta") t.beta = num();
    else if (field == "yeoh") t.yeoh_c = coeffs();
    else if (field == "yeoh_ecm") t.yeoh_ecm = coeffs();
    else if (field == "yeoh_cell") t.yeoh_cell = coeffs();
    else if (field == "c_fat") t.c_fat = num();
    else if (field == "sigma0") {
      const double s = num();
      if (t.tissue_kind == TissueKind::aponeurosis) t.sigma0_apo = s;
      else if (t.tissue_kind == TissueKind::tendon) t.sigma0_ten = s;
      else t.sigma0 = s;
    }
    else if (field == "epsbar0") t.epsbar0 = num();
    else if (field == "c_sarco") t.c_sarco = num();
    else if (field == "rho0") t.rho0 = num();
    else if (field == "shift_passive") {
      if (!value.is_boolean()) throw ConfigError(where + ": expected true/false");
      t.shift_passive = value.get<bool>();
    }
  }
  for (auto& [name, t] : m.regions) {
    if (t.tissue_kind == TissueKind::muscle && !kappa_set.count(name))
      t.kappa = mix_bulk_modulus(t.alpha, t.beta, t.kappa_ecm, t.kappa_cell, t.kappa_fat);
    try {
      t.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("/materials: ") + e.what());
    }
  }
}

Mesh build_mesh(const MeshSource& src) {
  Mesh m;
  if (src.generator == "block") {
    const Vec3 a(std::cos(src.fibre_angle), 0.0, std::sin(src.fibre_angle));
    m = generate_block(src.block, src.divisions, src.element, a);
  } else if (src.generator == "gastroc") {
    m = generate_gastroc(src.gastroc, src.divisions, src.element, src.apo_layers);
  } else {
    MeshReadOptions opt;
    opt.auto_normalize = src.auto_normalize;
    m = import_mesh(src.path, opt);
  }
  if (!src.fibres) {
    m.fibres = FibreField{};
  }
  if (src.scale != Vec3::Ones()) m = scale_mesh(m, src.scale);
  return m;
}

MaterialSet build_materials(const RunConfig& cfg) {
  MaterialSet m = cfg.materials_file.empty() ? load_materials(bundled_materials_path())
                                             : load_materials(cfg.materials_file);
  apply_material_overrides(m, cfg.material_overrides);
  return m;
}

RunConfig parse_config(Json doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("/preset: expected a name");
    Json base = preset(doc["preset"].get<std::string>());
    doc.erase("preset");
    merge(base, doc);
    doc = std::move(base);
  }
  RunConfig cfg;
  cfg.resolved = doc;
  Obj o(doc, "");
  cfg.study = o.get<std::string>("study", "custom");
  static const std::set<std::string> studies = {"custom", "dynamic-pull", "quasi-vs-dynamic",
                                                "isokinetic", "cp-force-length", "cyclic",
                                                "gastroc-activate"};
  if (!studies.count(cfg.study)) throw ConfigError("/study: unknown study '" + cfg.study + "'");
  if (o.has("mesh")) cfg.mesh = parse_mesh_source(o.at("mesh"), "/mesh");

  Mesh mesh;
  try {
    mesh = build_mesh(cfg.mesh);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("/mesh: ") + e.what());
  }
  const Vec3 lo = mesh.bbox_min(), hi = mesh.bbox_max();
  const double L = hi[0] - lo[0];

  if (o.has("materials")) {
    Obj mo(o.at("materials"), "/materials");
    cfg.materials_file = mo.get<std::string>("file", "");
    if (mo.has("overrides")) cfg.material_overrides = mo.at("overrides");
    mo.finish();
  }
  try {
    (void)build_materials(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("/materials: ") + e.what());
  }

  if (o.has("boundary")) {
    const Json& b = o.at("boundary");
    if (!b.is_array()) throw ConfigError("/boundary: expected an array");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string where = "/boundary/" + std::to_string(i);
      Obj bo(b[i], where);
      const std::string sel = bo.get<std::string>("selection", "");
      if (!mesh.has_selection(sel))
        throw ConfigError(where + "/selection: mesh has no set '" + sel + "'");
      const auto comps = parse_components(bo.at("components"), where + "/components");
      const ScalarProgram p = parse_program(bo.at("program"), where + "/program", L);
      for (int c : comps) cfg.boundary.add(sel, c, p);
      bo.finish();
    }
  }
  if (o.has("activation")) cfg.activation = parse_activation(o.at("activation"));
  if (o.has("time")) cfg.time = parse_time(o.at("time"));
  if (o.has("solver")) cfg.solver = parse_solver(o.at("solver"));
  if (o.has("probes")) {
    const Json& p = o.at("probes");
    if (!p.is_array()) throw ConfigError("/probes: expected an array");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string where = "/probes/" + std::to_string(i);
      Obj po(p[i], where);
      ProbeSpec s;
      s.name = po.get<std::string>("name", "probe" + std::to_string(i));
      s.kind = po.get<std::string>("kind", "");
      if (s.kind == "reaction-force") {
        s.selection = po.get<std::string>("selection", "");
        if (!mesh.has_selection(s.selection))
          throw ConfigError(where + "/selection: mesh has no set '" + s.selection + "'");
        if (po.has("direction")) s.direction = vec3(po.at("direction"), where + "/direction", false);
        s.negate = po.get<bool>("negate", false);
      } else if (s.kind == "point-displacement") {
        if (po.has("point_rel")) {
          const Vec3 f = vec3(po.at("point_rel"), where + "/point_rel", false);
          s.point = lo + f.cwiseProduct(hi - lo);
        } else {
          s.point = vec3(po.at("point"), where + "/point", true);
        }
        s.component = po.get<int>("component", 0);
        if (s.component < 0 || s.component > 2) throw ConfigError(where + "/component: out of range");
        try {
          (void)locate_point(mesh, s.point);
        } catch (const Error& e) {
          throw ConfigError(where + "/point: " + e.what());
        }
      } else if (s.kind == "field-summary") {
        s.quantity = po.get<std::string>("quantity", "max_abs_J_minus_1");
        static const std::set<std::string> q = {"max_abs_J_minus_1", "current_volume", "mean_p",
                                                "mean_kinematic_p", "mean_trace_sigma"};
        if (!q.count(s.quantity)) throw ConfigError(where + "/quantity: unknown '" + s.quantity + "'");
      } else if (s.kind == "activation") {
      } else {
        throw ConfigError(where + "/kind: unknown probe kind '" + s.kind + "'");
      }
      po.finish();
      cfg.probes.push_back(s);
    }
  }
  if (o.has("output")) {
    Obj oo(o.at("output"), "/output");
    cfg.output.dir = oo.get<std::string>("dir", cfg.output.dir);
    cfg.output.probe_every = oo.get<int>("probe_every", 1);
    cfg.output.snapshot_every = oo.get<int>("snapshot_every", 0);
    cfg.output.checkpoint = oo.get<bool>("checkpoint", true);
    oo.finish();
    if (cfg.output.probe_every < 1 || cfg.output.snapshot_every < 0)
      throw ConfigError("/output: cadences must be positive");
  }
  cfg.threads = o.get<int>("threads", 1);
  if (cfg.threads < 1) throw ConfigError("/threads: must be at least 1");
  cfg.deterministic = o.get<bool>("deterministic", false);
  if (o.has("study_params")) cfg.study_params = o.at("study_params");
  o.finish();
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json doc;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
      doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
  } else {
    doc = Json::object();
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(std::move(doc));
}

}  // namespace myo
