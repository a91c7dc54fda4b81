// myosim: run studies, generate and inspect meshes, export fields.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "myo/config.hpp"
#include "myo/errors.hpp"
#include "myo/studies.hpp"
#include "myo/vtk.hpp"

namespace fs = std::filesystem;
using namespace myo;

namespace {

constexpr int kOk = 0, kFailure = 1, kBadInput = 2, kNoConvergence = 3;

struct RunArgs {
  std::string config, preset, output_dir;
  std::vector<std::string> sets;
  int threads = 0, jobs = 1;
  bool deterministic = false;
};

int cmd_run(const RunArgs& args) {
  RunConfig cfg;
  try {
    Json doc = Json::object();
    if (!args.config.empty()) {
      std::ifstream in(args.config);
      if (!in) throw ConfigError("cannot open config '" + args.config + "'");
      try {
        doc = Json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + args.config + "' is not valid JSON: " + e.what());
      }
    }
    if (!args.preset.empty()) doc["preset"] = args.preset;
    if (args.config.empty() && args.preset.empty())
      throw ConfigError("give --config or --preset");
    for (const auto& s : args.sets) apply_override(doc, s);
    if (!args.output_dir.empty()) doc["output"]["dir"] = args.output_dir;
    if (args.threads > 0) doc["threads"] = args.threads;
    if (args.deterministic) doc["deterministic"] = true;
    cfg = parse_config(std::move(doc));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadInput;
  }

  StudyOptions opt;
  opt.output_dir = cfg.output.dir;
  opt.jobs = cfg.deterministic ? 1 : args.jobs;
  StudyResult r;
  try {
    r = run_study(cfg, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadInput;
  }
  std::cout << "study " << cfg.study << ": " << (r.converged ? "completed" : "solver failed")
            << ", artifacts in " << opt.output_dir << "\n";
  return r.converged ? kOk : kNoConvergence;
}

// --- mesh ----------------------------------------------------------------------

double fibre_angle_deg(const Vec3& a) { return std::atan2(a[2], a[0]) * 180.0 / M_PI; }

void report(const Mesh& m, std::ostream& out) {
  char buf[160];
  out << "element " << (m.kind == BasisKind::Q2 ? "Q2" : "Q1") << "\n";
  out << "nodes " << m.n_nodes() << "\n";
  out << "cells " << m.n_cells() << "\n";
  const double vol = m.volume();
  std::snprintf(buf, sizeof buf, "volume %.9g mm^3 (%.9g m^3)\n", vol * 1e9, vol);
  out << buf;
  const Vec3 lo = m.bbox_min(), hi = m.bbox_max();
  std::snprintf(buf, sizeof buf, "bbox [%.6g, %.6g] x [%.6g, %.6g] x [%.6g, %.6g] mm\n",
                lo[0] * 1e3, hi[0] * 1e3, lo[1] * 1e3, hi[1] * 1e3, lo[2] * 1e3, hi[2] * 1e3);
  out << buf;
  std::snprintf(buf, sizeof buf, "h_min %.6g mm\n", m.h_min() * 1e3);
  out << buf;
  std::map<int, int> count;
  for (int r : m.region) ++count[r];
  out << "regions";
  for (std::size_t i = 0; i < m.region_names.size(); ++i) out << " " << m.region_names[i];
  out << "\n";
  for (std::size_t i = 0; i < m.region_names.size(); ++i) {
    const std::string& name = m.region_names[i];
    std::snprintf(buf, sizeof buf, "region %s: %d cells, volume %.9g mm^3", name.c_str(),
                  count[static_cast<int>(i)], m.region_volume(name) * 1e9);
    out << buf;
    const auto it = m.fibres.per_region.find(name);
    if (it != m.fibres.per_region.end()) {
      const Vec3 a = it->second;
      std::snprintf(buf, sizeof buf, ", fibre (%.6g, %.6g, %.6g), angle %.6g deg", a[0], a[1],
                    a[2], fibre_angle_deg(a));
      out << buf;
    }
    out << "\n";
  }
  if (!m.fibres.per_cell.empty()) out << "fibres per cell\n";
  if (!m.fibres.per_point.empty()) out << "fibres per quadrature point, order " << m.fibres.point_order << "\n";
  for (const auto& [name, faces] : m.face_sets) out << "face set " << name << ": " << faces.size() << " faces\n";
  for (const auto& [name, nodes] : m.node_sets) out << "node set " << name << ": " << nodes.size() << " nodes\n";
  out << "checks ok\n";
}

int cmd_mesh_generate(const std::string& kind, const std::vector<int>& div,
                      const std::string& element, const std::vector<std::string>& sets,
                      const std::string& out) {
  try {
    Json doc = {{"generator", kind}, {"element", element}};
    if (!div.empty()) {
      if (div.size() != 3) throw ConfigError("--divisions takes three integers");
      doc["divisions"] = div;
    }
    for (const auto& s : sets) apply_override(doc, s);
    const Mesh m = build_mesh(parse_mesh_source(doc, "/mesh"));
    export_mesh(m, out);
    if (kind == "gastroc") {
      const MeshSource src = parse_mesh_source(doc, "/mesh");
      const GastrocLayout g = gastroc_layout(src.gastroc, src.divisions.nx);
      char buf[160];
      std::snprintf(buf, sizeof buf, "theta0 %.6g deg, gamma0 %.6g deg, height %.6g mm\n",
                    src.gastroc.theta0 * 180.0 / M_PI, g.gamma0 * 180.0 / M_PI, g.height * 1e3);
      std::cout << buf;
    }
    report(m, std::cout);
    std::cout << "wrote " << out << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
}

int cmd_mesh_inspect(const std::string& path, bool auto_normalize) {
  try {
    MeshReadOptions opt;
    opt.auto_normalize = auto_normalize;
    report(import_mesh(path, opt), std::cout);
    return kOk;
  } catch (const Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kBadInput;
  }
}

int cmd_mesh_convert(const std::string& in, const std::string& out, int refinements,
                     const std::vector<double>& scale, bool auto_normalize) {
  try {
    MeshReadOptions opt;
    opt.auto_normalize = auto_normalize;
    Mesh m = import_mesh(in, opt);
    for (int i = 0; i < refinements; ++i) m = refine(m);
    if (!scale.empty()) {
      if (scale.size() != 3) throw ConfigError("--scale takes three factors");
      m = scale_mesh(m, Vec3(scale[0], scale[1], scale[2]));
    }
    export_mesh(m, out);
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
}

// --- export --------------------------------------------------------------------

int cmd_export(const std::string& checkpoint, std::string mesh_path, std::string materials,
               const std::string& out, const std::string& format) {
  Checkpoint cp;
  Mesh mesh;
  MaterialSet mats;
  try {
    cp = load_checkpoint(checkpoint);
    const fs::path base = fs::path(checkpoint).parent_path();
    if (mesh_path.empty()) {
      if (cp.mesh_path.empty()) throw Error("checkpoint names no mesh; pass --mesh");
      mesh_path = fs::path(cp.mesh_path).is_absolute() ? cp.mesh_path
                                                       : (base / cp.mesh_path).string();
    }
    if (materials.empty()) materials = cp.materials_path;
    mesh = import_mesh(mesh_path);
    mats = materials.empty() ? load_materials(bundled_materials_path()) : load_materials(materials);
  } catch (const Error& e) {
    std::cerr << "cannot read checkpoint: " << e.what() << "\n";
    return kBadInput;
  }
  try {
    Assembler a(mesh, mats);
    if (cp.state.x.size() != a.dofs().size())
      throw ValidationError("checkpoint has " + std::to_string(cp.state.x.size()) +
                            " unknowns, mesh needs " + std::to_string(a.dofs().size()));
    if (format == "vtk") {
      write_vtk(a, cp.state, out);
    } else {
      Checkpoint copy = cp;
      copy.mesh_path = mesh_path;
      save_checkpoint(copy, out);
    }
  } catch (const Error& e) {
    std::cerr << "export failed: " << e.what() << "\n";
    return kBadInput;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"myosim: finite-strain muscle tissue simulation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a configured study");
  run_cmd->add_option("--config,-c", run.config, "JSON run configuration");
  run_cmd->add_option("--preset,-p", run.preset, "Start from a named preset");
  run_cmd->add_option("--set,-s", run.sets, "Dotted-path override key=value")->take_all();
  run_cmd->add_option("--output-dir,-o", run.output_dir, "Artifact directory");
  run_cmd->add_option("--threads,-t", run.threads, "Assembly threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--jobs,-j", run.jobs, "Concurrent independent runs")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--deterministic", run.deterministic, "Single-threaded, bit-reproducible");

  auto* mesh_cmd = app.add_subcommand("mesh", "Generate, inspect or convert meshes");
  mesh_cmd->require_subcommand(1);
  std::string gen_kind = "block", gen_element = "Q2", gen_out;
  std::vector<int> gen_div;
  std::vector<std::string> gen_sets;
  auto* gen = mesh_cmd->add_subcommand("generate", "Write a generated mesh");
  gen->add_option("kind", gen_kind, "block or gastroc")->check(CLI::IsMember({"block", "gastroc"}));
  gen->add_option("--divisions,-d", gen_div, "nx ny nz")->expected(3);
  gen->add_option("--element,-e", gen_element, "Q1 or Q2")->check(CLI::IsMember({"Q1", "Q2"}));
  gen->add_option("--set,-s", gen_sets, "Geometry override key=value, e.g. L=60mm");
  gen->add_option("--output,-o", gen_out, "Mesh file")->required();

  std::string inspect_path;
  bool inspect_norm = false;
  auto* inspect = mesh_cmd->add_subcommand("inspect", "Report counts, volume and checks");
  inspect->add_option("file", inspect_path)->required();
  inspect->add_flag("--auto-normalize", inspect_norm, "Renormalize fibre directions");

  std::string conv_in, conv_out;
  int conv_refine = 0;
  std::vector<double> conv_scale;
  bool conv_norm = false;
  auto* convert = mesh_cmd->add_subcommand("convert", "Rewrite, refine or scale a mesh");
  convert->add_option("input", conv_in)->required();
  convert->add_option("output", conv_out)->required();
  convert->add_option("--refine,-r", conv_refine, "Uniform refinements")->check(CLI::NonNegativeNumber);
  convert->add_option("--scale", conv_scale, "sx sy sz")->expected(3);
  convert->add_flag("--auto-normalize", conv_norm, "Renormalize fibre directions");

  std::string ex_cp, ex_mesh, ex_mat, ex_out, ex_format = "vtk";
  auto* ex = app.add_subcommand("export", "Export a checkpoint");
  ex->add_option("checkpoint", ex_cp)->required();
  ex->add_option("--output,-o", ex_out, "Output file")->required();
  ex->add_option("--format,-f", ex_format, "vtk or state")->check(CLI::IsMember({"vtk", "state"}));
  ex->add_option("--mesh", ex_mesh, "Mesh file (default: the one named in the checkpoint)");
  ex->add_option("--materials", ex_mat, "Material file");

  std::string preset_name;
  auto* presets = app.add_subcommand("presets", "List presets or print one");
  presets->add_option("name", preset_name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*gen) return cmd_mesh_generate(gen_kind, gen_div, gen_element, gen_sets, gen_out);
    if (*inspect) return cmd_mesh_inspect(inspect_path, inspect_norm);
    if (*convert) return cmd_mesh_convert(conv_in, conv_out, conv_refine, conv_scale, conv_norm);
    if (*ex) return cmd_export(ex_cp, ex_mesh, ex_mat, ex_out, ex_format);
    if (*presets) {
      if (preset_name.empty()) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
      } else {
        try {
          std::cout << preset(preset_name).dump(2) << "\n";
        } catch (const ConfigError& e) {
          std::cerr << e.what() << "\n";
          return kBadInput;
        }
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
