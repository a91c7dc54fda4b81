// Experiment drivers: single configured runs and the multi-run studies
// (quasi-static vs dynamic pull, isokinetic sweep, CP force-length).
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "myo/config.hpp"
#include "myo/dynamics.hpp"
#include "myo/probes.hpp"

namespace myo {

/// One simulation: mesh, materials, programs, time, probes.
struct RunSpec {
  const Mesh* mesh = nullptr;
  const MaterialSet* materials = nullptr;
  BoundaryProgram boundary;
  ActivationProgram activation;
  TimeConfig time;
  NewtonConfig solver;
  std::vector<ProbeSpec> probes;
  int threads = 1;
  int probe_every = 1;
  /// Called for the initial state and after every accepted step.
  std::function<void(const Assembler&, const SystemState&)> on_state;
};

struct RunResult {
  ProbeSeries probes;
  SystemState final_state;
  long steps = 0;
  int newton_iterations = 0;
  int max_newton_iterations = 0;
  int halvings = 0;
  double final_residual = 0.0;  // scaled free-dof residual norm of the final state
  double wall_time = 0.0;
  bool converged = true;
  std::string error;
  /// Scaled residual histories, one per step.
  std::vector<std::vector<double>> histories;

  Json summary() const;
};

/// Runs to spec.time.t_end. Solver failures are caught: the result then
/// has converged = false and keeps everything recorded so far.
RunResult run_simulation(const RunSpec& spec);

/// Probe value on a converged state; `ctx` is the context of its step.
double probe_value(const ProbeSpec& probe, const Assembler& a, const SystemState& state,
                   const AssemblyContext& ctx, const Vector* residual);

struct StudyOptions {
  std::string output_dir;  // empty: nothing written
  int jobs = 1;            // concurrent independent runs
};

struct StudyResult {
  std::string study;
  std::map<std::string, ProbeSeries> series;
  Json summary = Json::object();
  bool converged = true;
};

/// Executes cfg.study. Writes probes (CSV), VTK snapshots, a checkpoint,
/// summary.json and resolved_config.json when an output directory is set.
StudyResult run_study(const RunConfig& cfg, const StudyOptions& opt = {});

/// RunSpec for the configured mesh/materials/programs of cfg.
RunSpec run_spec(const RunConfig& cfg, const Mesh& mesh, const MaterialSet& materials);

// --- Study building blocks ---------------------------------------------------

/// Displacement table for the five-phase isokinetic protocol: lengthen to
/// `stretch`, settle, activate, settle, shorten at `speed` (1/s, negative)
/// to `shorten_to`. Times of the phase boundaries are returned in `marks`.
struct IsokineticProtocol {
  double L = 0.0;
  double stretch = 1.1, shorten_to = 1.0, speed = -1.0;
  double t_lengthen = 0.1, t_settle = 0.05, t_activate = 0.25, t_settle2 = 0.05;

  std::vector<double> marks() const;  // phase ends, last is the run end
  ScalarProgram displacement() const;
  ActivationProgram activation(double level = 1.0) const;
  double stretch_at(double t) const;
};

/// Uniaxial boundary: symmetry rollers on -x, -y, -z and ux = program on +x.
BoundaryProgram roller_pull(const ScalarProgram& ux);

/// Active force (total minus passive, both sampled on the +x face)
/// interpolated at the given stretches during shortening.
std::vector<double> force_at_stretches(const ForceDecomposition& d,
                                       const std::vector<double>& stretch,
                                       const std::vector<double>& at);

}  // namespace myo
