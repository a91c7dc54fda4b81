#include "myo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "myo/errors.hpp"

namespace myo {

double TimeConfig::requested_dt(double t) const {
  for (const auto& w : schedule)
    if (t >= w.t_start && t < w.t_end) return w.dt;
  return dt_in;
}

void TimeConfig::validate() const {
  if (!(dt_in > 0.0)) throw ConfigError("time.dt must be positive");
  if (!(C_max > 0.0 && C_max <= 1.0)) throw ConfigError("time.C_max must lie in (0, 1]");
  if (t_end < 0.0) throw ConfigError("time.t_end must be non-negative");
  if (n_steps < 1) throw ConfigError("time.n_steps must be at least 1");
  if (output_every < 1) throw ConfigError("time.output_every must be at least 1");
  for (const auto& w : schedule)
    if (!(w.dt > 0.0) || !(w.t_end > w.t_start))
      throw ConfigError("time.schedule windows need t_end > t_start and dt > 0");
}

double cfl_dt(double h_min, double v_inf, double dt_in, double C_max) {
  if (!(v_inf > 0.0)) return dt_in;
  return std::min(dt_in, C_max * h_min / v_inf);
}

double cfl_dt(const Mesh& mesh, const Vector& v, double dt_in, double C_max) {
  double vmax = 0.0;
  for (Eigen::Index i = 0; i + 2 < v.size(); i += 3)
    vmax = std::max(vmax, v.segment<3>(i).norm());
  if (vmax == 0.0) return dt_in;
  return cfl_dt(mesh.h_min(), vmax, dt_in, C_max);
}

Simulation::Simulation(Assembler& assembler, BoundaryProgram boundary,
                       ActivationProgram activation, NewtonConfig newton)
    : assembler_(assembler),
      boundary_(std::move(boundary)),
      tracker_(std::move(activation)),
      newton_(newton) {
  const ConstraintValues cv =
      apply_constraints(assembler_.mesh(), assembler_.dofs(), boundary_, 0.0);
  assembler_.dofs().set_constrained(cv.dofs);
}

SystemState Simulation::initial_state() const {
  SystemState s = assembler_.initial_state();
  s.t = tracker_.time();
  s.activation = tracker_.field(assembler_.mesh());
  s.activation_state = tracker_.value();
  const ConstraintValues cv =
      apply_constraints(assembler_.mesh(), assembler_.dofs(), boundary_, s.t);
  for (std::size_t i = 0; i < cv.dofs.size(); ++i) s.x[cv.dofs[i]] = cv.values[i];
  return s;
}

Vector Simulation::targets(double t) const {
  const ConstraintValues cv =
      apply_constraints(assembler_.mesh(), assembler_.dofs(), boundary_, t);
  if (cv.dofs != assembler_.dofs().constrained())
    throw Error("boundary program changed its constrained set");
  return Eigen::Map<const Vector>(cv.values.data(), static_cast<Eigen::Index>(cv.values.size()));
}

SystemState Simulation::step_dynamic(const SystemState& prev, double dt, SolveStats* stats) {
  if (!(dt > 0.0)) throw Error("step_dynamic: dt must be positive");
  const DofMap& d = assembler_.dofs();
  const Vector u_prev = prev.x.head(d.n_u());
  if (implicit_rate_) rates_.clear();
  else rates_ = assembler_.rate_cache(u_prev, prev.v);
  last_dt_ = dt;

  SystemState next;
  next.t = prev.t + dt;
  next.step = prev.step + 1;
  tracker_.reset(prev.activation_state, prev.t);
  next.activation_state = tracker_.advance(next.t);
  next.activation = tracker_.field(assembler_.mesh());

  AssemblyContext ctx;
  ctx.mode = Mode::dynamic;
  ctx.dt = dt;
  ctx.u_prev = &prev.x;
  ctx.v_prev = &prev.v;
  ctx.activation = &next.activation;
  ctx.epsbar = implicit_rate_ ? nullptr : &rates_;
  ctx.implicit_rate = implicit_rate_;
  StepProblem problem(assembler_, ctx);
  next.x = prev.x;
  SolveStats s = newton_solve(problem, next.x, targets(next.t), newton_);
  if (stats) *stats = s;
  next.v = (next.x.head(d.n_u()) - u_prev) / dt;
  return next;
}

SystemState Simulation::step_quasistatic(const SystemState& prev, double t_next,
                                         SolveStats* stats) {
  SystemState next;
  next.t = t_next;
  next.step = prev.step + 1;
  tracker_.reset(prev.activation_state, prev.t);
  next.activation_state = tracker_.advance(t_next);
  next.activation = tracker_.field(assembler_.mesh());

  AssemblyContext ctx;
  ctx.mode = Mode::quasistatic;
  ctx.activation = &next.activation;
  StepProblem problem(assembler_, ctx);
  next.x = prev.x;
  SolveStats s = newton_solve(problem, next.x, targets(t_next), newton_);
  if (stats) *stats = s;
  next.v = Vector::Zero(assembler_.dofs().n_u());
  return next;
}

SystemState Simulation::run(
    SystemState state, const TimeConfig& time,
    const std::function<void(const SystemState&, const SolveStats&)>& on_step) {
  time.validate();
  implicit_rate_ = time.implicit_rate;
  std::vector<double> marks = time.breakpoints;
  for (const auto& w : time.schedule) {
    marks.push_back(w.t_start);
    marks.push_back(w.t_end);
  }
  marks.push_back(time.t_end);
  std::sort(marks.begin(), marks.end());

  if (time.mode == Mode::quasistatic) {
    std::vector<double> ts;
    for (int k = 1; k <= time.n_steps; ++k) ts.push_back(time.t_end * k / time.n_steps);
    for (double m : marks)
      if (m > state.t && m < time.t_end) ts.push_back(m);
    std::sort(ts.begin(), ts.end());
    double last = state.t;
    for (double t : ts) {
      if (t <= last + 1e-12 * std::max(1.0, std::abs(t))) continue;
      SolveStats st;
      state = step_quasistatic(state, t, &st);
      last = t;
      if (on_step) on_step(state, st);
    }
    return state;
  }

  const double eps = 1e-12 * std::max(1.0, time.t_end);
  while (state.t < time.t_end - eps) {
    double dt = cfl_dt(assembler_.mesh(), state.v, time.requested_dt(state.t), time.C_max);
    double next_mark = time.t_end;
    for (double m : marks)
      if (m > state.t + eps) {
        next_mark = m;
        break;
      }
    if (state.t + dt > next_mark - 1e-3 * dt) dt = next_mark - state.t;
    SolveStats st;
    SystemState next = step_dynamic(state, dt, &st);
    if (std::abs(next.t - next_mark) <= 1e-3 * dt) next.t = next_mark;
    state = std::move(next);
    if (on_step) on_step(state, st);
  }
  return state;
}

// --- Checkpoints -------------------------------------------------------------

namespace {

void put_vector(std::ostringstream& out, const char* name, const double* v, std::size_t n) {
  out << name << " " << n << "\n";
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out << buf << "\n";
  }
}

}  // namespace

std::string write_checkpoint(const Checkpoint& cp) {
  std::ostringstream out;
  char buf[32];
  out << "MYOSTATE 1\n";
  out << "MESH " << (cp.mesh_path.empty() ? "-" : cp.mesh_path) << "\n";
  out << "MATERIALS " << (cp.materials_path.empty() ? "-" : cp.materials_path) << "\n";
  out << "MODE " << (cp.mode == Mode::dynamic ? "dynamic" : "quasistatic") << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", cp.state.t);
  out << "TIME " << buf << "\n";
  out << "STEP " << cp.state.step << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", cp.state.activation_state);
  out << "ACTIVATION_STATE " << buf << "\n";
  put_vector(out, "X", cp.state.x.data(), static_cast<std::size_t>(cp.state.x.size()));
  put_vector(out, "V", cp.state.v.data(), static_cast<std::size_t>(cp.state.v.size()));
  put_vector(out, "ACTIVATION", cp.state.activation.data(), cp.state.activation.size());
  out << "END\n";
  return out.str();
}

Checkpoint read_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::size_t line_no = 0;
  std::string line;
  auto next = [&](const std::string& what) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty()) return;
    }
    throw ParseError("unexpected end of checkpoint, expected " + what, line_no);
  };
  auto field = [&](const std::string& key) {
    next(key);
    if (line.compare(0, key.size() + 1, key + " ") != 0)
      throw ParseError("expected '" + key + "'", line_no);
    return line.substr(key.size() + 1);
  };
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("bad number '" + s + "'", line_no);
  };
  auto vec = [&](const std::string& key) {
    const std::size_t n = static_cast<std::size_t>(number(field(key)));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      next("value");
      v[i] = number(line);
    }
    return v;
  };

  next("header");
  if (line != "MYOSTATE 1") throw ParseError("expected header 'MYOSTATE 1'", line_no);
  Checkpoint cp;
  cp.mesh_path = field("MESH");
  if (cp.mesh_path == "-") cp.mesh_path.clear();
  cp.materials_path = field("MATERIALS");
  if (cp.materials_path == "-") cp.materials_path.clear();
  const std::string mode = field("MODE");
  if (mode == "dynamic") cp.mode = Mode::dynamic;
  else if (mode == "quasistatic") cp.mode = Mode::quasistatic;
  else throw ParseError("unknown mode '" + mode + "'", line_no);
  cp.state.t = number(field("TIME"));
  cp.state.step = static_cast<long>(number(field("STEP")));
  cp.state.activation_state = number(field("ACTIVATION_STATE"));
  auto x = vec("X");
  auto v = vec("V");
  cp.state.activation = vec("ACTIVATION");
  cp.state.x = Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  cp.state.v = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  next("END");
  if (line != "END") throw ParseError("expected END", line_no);
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << write_checkpoint(cp);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return read_checkpoint(buf.str());
}

}  // namespace myo
