#include "myo/programs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "myo/errors.hpp"

namespace myo {

double ScalarProgram::operator()(double t) const {
  switch (kind) {
    case Kind::constant: return value;
    case Kind::ramp:
      if (t <= t0) return 0.0;
      return rate * (std::min(t, t1) - t0);
    case Kind::sinusoid: return amplitude * std::sin(2.0 * M_PI * frequency * t);
    case Kind::velocity: return t <= t0 ? 0.0 : rate * (t - t0);
    case Kind::table: {
      if (table.empty()) return 0.0;
      if (t <= table.front().first) return table.front().second;
      if (t >= table.back().first) return table.back().second;
      auto hi = std::upper_bound(table.begin(), table.end(), t,
                                 [](double v, const auto& p) { return v < p.first; });
      auto lo = hi - 1;
      const double s = (t - lo->first) / (hi->first - lo->first);
      return lo->second + s * (hi->second - lo->second);
    }
  }
  return 0.0;
}

double ScalarProgram::rate_at(double t) const {
  switch (kind) {
    case Kind::constant: return 0.0;
    case Kind::ramp: return (t >= t0 && t < t1) ? rate : 0.0;
    case Kind::sinusoid:
      return 2.0 * M_PI * frequency * amplitude * std::cos(2.0 * M_PI * frequency * t);
    case Kind::velocity: return t >= t0 ? rate : 0.0;
    case Kind::table: {
      for (std::size_t i = 0; i + 1 < table.size(); ++i)
        if (t >= table[i].first && t < table[i + 1].first)
          return (table[i + 1].second - table[i].second) /
                 (table[i + 1].first - table[i].first);
      return 0.0;
    }
  }
  return 0.0;
}

ScalarProgram ScalarProgram::constant(double v) {
  ScalarProgram p;
  p.value = v;
  return p;
}

ScalarProgram ScalarProgram::ramp(double t0, double t1, double rate) {
  ScalarProgram p;
  p.kind = Kind::ramp;
  p.t0 = t0;
  p.t1 = t1;
  p.rate = rate;
  return p;
}

ScalarProgram ScalarProgram::sinusoid(double amplitude, double frequency) {
  ScalarProgram p;
  p.kind = Kind::sinusoid;
  p.amplitude = amplitude;
  p.frequency = frequency;
  return p;
}

ScalarProgram ScalarProgram::velocity(double t0, double rate) {
  ScalarProgram p;
  p.kind = Kind::velocity;
  p.t0 = t0;
  p.rate = rate;
  return p;
}

ScalarProgram ScalarProgram::piecewise(std::vector<std::pair<double, double>> points) {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].first > points[i - 1].first))
      throw ConfigError("piecewise program times must increase");
  ScalarProgram p;
  p.kind = Kind::table;
  p.table = std::move(points);
  return p;
}

void BoundaryProgram::fix(const std::string& selection) {
  for (int c = 0; c < 3; ++c) add(selection, c, ScalarProgram::constant(0.0));
}

void BoundaryProgram::add(const std::string& selection, int component, ScalarProgram p) {
  if (component < 0 || component > 2) throw ConfigError("component must be 0, 1 or 2");
  conditions.push_back({selection, component, std::move(p)});
}

ConstraintValues apply_constraints(const Mesh& mesh, const DofMap& dofs,
                                   const BoundaryProgram& program, double t) {
  std::map<int, double> values;
  for (const auto& c : program.conditions) {
    const double v = c.program(t);
    for (int n : mesh.selection_nodes(c.selection)) values[dofs.u(n, c.component)] = v;
  }
  ConstraintValues out;
  for (const auto& [d, v] : values) {
    out.dofs.push_back(d);
    out.values.push_back(v);
  }
  return out;
}

double ActivationProgram::excitation_at(double t) const {
  if (kind == Kind::square_wave) {
    if (t < t_act || (t_end > t_act && t > t_end)) return 0.0;
    const double phase = std::fmod(t - t_act, period) / period;
    return phase < duty ? level : 0.0;
  }
  return std::clamp(excitation(t), 0.0, 1.0);
}

void ActivationProgram::validate() const {
  if (level < 0.0 || level > 1.0) throw ConfigError("activation level must lie in [0, 1]");
  if (kind == Kind::ramp && !(t_end > t_act))
    throw ConfigError("activation ramp needs t_end > t_act");
  if ((kind == Kind::zajac || kind == Kind::square_wave) && !(tau_act > 0.0))
    throw ConfigError("tau_act must be positive");
  if (beta_deact <= 0.0 || beta_deact > 1.0) throw ConfigError("beta_deact must lie in (0, 1]");
  if (kind == Kind::square_wave && (!(period > 0.0) || duty < 0.0 || duty > 1.0))
    throw ConfigError("square wave needs period > 0 and duty in [0, 1]");
}

double activation_value(const ActivationProgram& p, double t) {
  switch (p.kind) {
    case ActivationProgram::Kind::none: return 0.0;
    case ActivationProgram::Kind::hold: return std::clamp(p.level, 0.0, 1.0);
    case ActivationProgram::Kind::ramp: {
      if (t <= p.t_act) return 0.0;
      if (t >= p.t_end) return std::clamp(p.level, 0.0, 1.0);
      return std::clamp(p.level * (t - p.t_act) / (p.t_end - p.t_act), 0.0, 1.0);
    }
    default: throw Error("activation_value: ODE-driven programs need an ActivationTracker");
  }
}

double zajac_step(double a_prev, double u0, double dt, double tau_act, double beta) {
  return (a_prev + dt * u0 / tau_act) / (1.0 + dt * (beta + (1.0 - beta) * u0) / tau_act);
}

ActivationTracker::ActivationTracker(ActivationProgram program, double a0, double t0)
    : program_(std::move(program)), a_(a0), t_(t0) {
  program_.validate();
  if (program_.kind != ActivationProgram::Kind::zajac &&
      program_.kind != ActivationProgram::Kind::square_wave)
    a_ = activation_value(program_, t0);
}

double ActivationTracker::advance(double t) {
  if (program_.kind == ActivationProgram::Kind::zajac ||
      program_.kind == ActivationProgram::Kind::square_wave) {
    const double dt = t - t_;
    if (dt > 0.0)
      a_ = zajac_step(a_, program_.excitation_at(t), dt, program_.tau_act, program_.beta_deact);
  } else {
    a_ = activation_value(program_, t);
  }
  a_ = std::clamp(a_, 0.0, 1.0);
  t_ = t;
  return a_;
}

std::vector<double> ActivationTracker::field(const Mesh& mesh) const {
  std::vector<double> out(mesh.n_cells(), 0.0);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const std::string& r = mesh.region_of(static_cast<int>(c));
    if (std::find(program_.regions.begin(), program_.regions.end(), r) != program_.regions.end())
      out[c] = a_;
  }
  return out;
}

}  // namespace myo
