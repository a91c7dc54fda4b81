// Time programs for boundary displacements and muscle activation.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "myo/assembly.hpp"
#include "myo/mesh.hpp"

namespace myo {

/// Scalar function of time.
struct ScalarProgram {
  enum class Kind { constant, ramp, sinusoid, velocity, table };
  Kind kind = Kind::constant;
  double value = 0.0;  // constant
  // ramp: 0 before t0, rate (t - t0) on [t0, t1], held afterwards
  // velocity: rate (t - t0) for t >= t0, unbounded
  double t0 = 0.0, t1 = 0.0, rate = 0.0;
  // sinusoid: amplitude sin(2 pi frequency t)
  double amplitude = 0.0, frequency = 0.0;
  // table: piecewise linear through (t, value), constant beyond the ends
  std::vector<std::pair<double, double>> table;

  double operator()(double t) const;
  /// Time derivative (right-sided at kinks).
  double rate_at(double t) const;

  static ScalarProgram constant(double v);
  static ScalarProgram ramp(double t0, double t1, double rate);
  static ScalarProgram sinusoid(double amplitude, double frequency);
  static ScalarProgram velocity(double t0, double rate);
  static ScalarProgram piecewise(std::vector<std::pair<double, double>> points);
};

/// Prescribed displacement component on a face or node set.
struct DirichletCondition {
  std::string selection;
  int component = 0;  // 0, 1, 2
  ScalarProgram program;
};

struct BoundaryProgram {
  std::vector<DirichletCondition> conditions;

  /// All three components of `selection` held at zero.
  void fix(const std::string& selection);
  void add(const std::string& selection, int component, ScalarProgram p);
};

struct ConstraintValues {
  std::vector<int> dofs;       // sorted
  std::vector<double> values;  // aligned with dofs
};

/// Evaluates every condition at time t. A dof named by several conditions
/// takes the value of the last one.
ConstraintValues apply_constraints(const Mesh& mesh, const DofMap& dofs,
                                   const BoundaryProgram& program, double t);

struct ActivationProgram {
  enum class Kind { none, ramp, hold, zajac, square_wave };
  Kind kind = Kind::none;
  double t_act = 0.0, t_end = 0.0, level = 1.0;  // ramp window and level
  // Activation ODE: da/dt = (u0 - (beta + (1 - beta) u0) a) / tau_act
  double tau_act = 0.01, beta_deact = 1.0;
  ScalarProgram excitation = ScalarProgram::constant(1.0);  // zajac u0(t)
  double period = 1.0, duty = 0.5;  // square_wave excitation, starts at t_act
  std::vector<std::string> regions = {"muscle"};

  double excitation_at(double t) const;
  void validate() const;
};

/// a(t) for the explicit kinds (none/ramp/hold). ODE kinds need a tracker.
double activation_value(const ActivationProgram& program, double t);

/// One implicit Euler step of the activation ODE.
double zajac_step(double a_prev, double u0, double dt, double tau_act, double beta);

/// Holds the ODE state between steps.
class ActivationTracker {
 public:
  explicit ActivationTracker(ActivationProgram program, double a0 = 0.0, double t0 = 0.0);
  /// Advances to time t (t >= current time) and returns a(t), clamped to [0, 1].
  double advance(double t);
  double value() const { return a_; }
  double time() const { return t_; }
  void reset(double a, double t) { a_ = a; t_ = t; }
  const ActivationProgram& program() const { return program_; }

  /// Per-cell field: value on cells of the program's regions, 0 elsewhere.
  std::vector<double> field(const Mesh& mesh) const;

 private:
  ActivationProgram program_;
  double a_, t_;
};

}  // namespace myo
