// Time marching: the semi-implicit dynamic step, the quasi-static step,
// CFL step control and checkpoints.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "myo/assembly.hpp"
#include "myo/programs.hpp"
#include "myo/solver.hpp"

namespace myo {

struct TimeConfig {
  Mode mode = Mode::dynamic;
  double dt_in = 1e-5;  // s
  double t_end = 0.0;   // s
  double C_max = 0.5;
  int output_every = 1;
  /// Requested step inside [t_start, t_end); dt_in elsewhere.
  struct Window {
    double t_start, t_end, dt;
  };
  std::vector<Window> schedule;
  /// Times every step sequence must land on exactly.
  std::vector<double> breakpoints;
  int n_steps = 10;  // quasi-static pseudo-time steps over [0, t_end]
  /// Fibre strain rate from the current iterate instead of the lagged
  /// velocity (see AssemblyContext::implicit_rate).
  bool implicit_rate = false;

  double requested_dt(double t) const;
  void validate() const;
};

double cfl_dt(double h_min, double v_inf, double dt_in, double C_max);
/// h_min from the mesh cell edges; v_inf the largest nodal speed.
double cfl_dt(const Mesh& mesh, const Vector& v, double dt_in, double C_max);

/// Adapts the assembler to the Newton driver for one step.
class StepProblem : public NonlinearProblem {
 public:
  StepProblem(const Assembler& a, AssemblyContext ctx) : a_(a), ctx_(ctx) {}
  int size() const override { return a_.dofs().size(); }
  const std::vector<int>& constrained() const override { return a_.dofs().constrained(); }
  void evaluate(const Vector& x, Vector* r, SparseMatrix* K) const override {
    a_.residual_and_tangent(x, ctx_, r, K);
  }
  Vector residual_scale() const override { return a_.residual_scale(); }

 private:
  const Assembler& a_;
  AssemblyContext ctx_;
};

class Simulation {
 public:
  Simulation(Assembler& assembler, BoundaryProgram boundary, ActivationProgram activation,
             NewtonConfig newton = {});

  SystemState initial_state() const;

  /// Implicit solve for u^n with the lagged velocity in the rate terms, then
  /// v^n = (u^n - u^{n-1}) / dt.
  SystemState step_dynamic(const SystemState& prev, double dt, SolveStats* stats = nullptr);
  /// Equilibrium at t_next with no inertia and sigma_vel = 1; v = 0.
  SystemState step_quasistatic(const SystemState& prev, double t_next,
                               SolveStats* stats = nullptr);

  /// Runs from `state` to t_end; calls `on_step` after every accepted step.
  /// In dynamic mode dt = min(requested, CFL); steps land on breakpoints.
  SystemState run(SystemState state, const TimeConfig& time,
                  const std::function<void(const SystemState&, const SolveStats&)>& on_step);

  Assembler& assembler() { return assembler_; }
  const Assembler& assembler() const { return assembler_; }
  const BoundaryProgram& boundary() const { return boundary_; }
  ActivationTracker& activation() { return tracker_; }
  const NewtonConfig& newton() const { return newton_; }
  void set_implicit_rate(bool on) { implicit_rate_ = on; }
  bool implicit_rate() const { return implicit_rate_; }
  NewtonConfig& newton() { return newton_; }

  /// Lagged fibre rates used by the last dynamic step.
  const std::vector<double>& last_rates() const { return rates_; }
  /// Step size of the last dynamic step.
  double last_dt() const { return last_dt_; }

 private:
  Vector targets(double t) const;

  Assembler& assembler_;
  BoundaryProgram boundary_;
  ActivationTracker tracker_;
  NewtonConfig newton_;
  std::vector<double> rates_;
  double last_dt_ = 0.0;
  bool implicit_rate_ = false;
};

// --- Checkpoints -----------------------------------------------------------

struct Checkpoint {
  SystemState state;
  std::string mesh_path;       // mesh file the state belongs to
  std::string materials_path;  // empty for the bundled defaults
  Mode mode = Mode::dynamic;
};

std::string write_checkpoint(const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace myo
