// Run configuration: a JSON document, named presets, dotted-path overrides
// and validation into typed settings.
#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "myo/dynamics.hpp"
#include "myo/materials.hpp"
#include "myo/mesh.hpp"
#include "myo/programs.hpp"
#include "myo/solver.hpp"

namespace myo {

using Json = nlohmann::json;

struct MeshSource {
  std::string generator = "block";  // block | gastroc | file
  std::string path;                 // generator == file
  BlockSpec block;
  GastrocSpec gastroc;
  Divisions divisions{4, 1, 1};
  BasisKind element = BasisKind::Q2;
  int apo_layers = 1;
  double fibre_angle = 0.0;  // block fibres, radians from x towards z
  bool fibres = true;
  Vec3 scale = Vec3::Ones();  // applied after generation
  bool auto_normalize = false;
};

struct ProbeSpec {
  std::string name;
  std::string kind;  // reaction-force | point-displacement | field-summary | activation
  std::string selection;
  Vec3 direction = Vec3::UnitX();
  bool negate = false;
  Vec3 point = Vec3::Zero();  // m, resolved
  int component = 0;
  std::string quantity;
};

struct OutputConfig {
  std::string dir = "output";
  int probe_every = 1;
  int snapshot_every = 0;  // 0: final snapshot only
  bool checkpoint = true;
};

struct RunConfig {
  std::string study = "custom";
  MeshSource mesh;
  std::string materials_file;  // empty: bundled defaults
  Json material_overrides = Json::object();
  BoundaryProgram boundary;
  ActivationProgram activation;
  TimeConfig time;
  NewtonConfig solver;
  std::vector<ProbeSpec> probes;
  OutputConfig output;
  int threads = 1;
  bool deterministic = false;
  Json study_params = Json::object();

  Json resolved;  // the document this config was built from
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();
/// Preset document; throws ConfigError for unknown names.
Json preset(const std::string& name);

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and
/// taken as a string otherwise. Unknown paths are created and rejected
/// later by validation.
void apply_override(Json& doc, const std::string& assignment);

/// Merges a document over its "preset" (if named) and validates it.
/// Throws ConfigError naming the offending key and location.
RunConfig parse_config(Json doc);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Length in metres from a number (m) or a string with unit suffix m/mm/cm.
double parse_length(const Json& v, const std::string& where);

/// Mesh section of a config document; `where` names it in errors.
MeshSource parse_mesh_source(const Json& j, const std::string& where);
/// Builds the mesh described by `src`.
Mesh build_mesh(const MeshSource& src);
/// Bundled or file materials with the overrides applied.
MaterialSet build_materials(const RunConfig& cfg);
/// Applies {"muscle.alpha": 0.4, ...}; muscle kappa follows the mixture
/// unless set explicitly.
void apply_material_overrides(MaterialSet& m, const Json& overrides);

}  // namespace myo
