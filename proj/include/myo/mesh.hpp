// Reference-configuration hexahedral meshes, generators and the native
// text format.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "myo/elements.hpp"
#include "myo/tensor.hpp"

namespace myo {

struct FaceRef {
  int cell = 0;
  int face = 0;  // local face, see face_nodes()
  bool operator==(const FaceRef& o) const { return cell == o.cell && face == o.face; }
  bool operator<(const FaceRef& o) const {
    return cell != o.cell ? cell < o.cell : face < o.face;
  }
};

/// Reference fibre directions. Lookup order: per quadrature point, per
/// cell, per region. Regions without an entry carry no fibres.
struct FibreField {
  std::map<std::string, Vec3> per_region;
  std::vector<Vec3> per_cell;
  int point_order = 0;                       // Gauss order of per_point data
  std::vector<std::vector<Vec3>> per_point;  // [cell][qp]

  bool has(int cell, const std::string& region) const;
  /// Direction at quadrature point qp of a rule with `order` points per axis.
  Vec3 at(int cell, const std::string& region, int qp, int order) const;
};

struct Mesh {
  BasisKind kind = BasisKind::Q2;
  std::vector<Vec3> nodes;
  std::vector<std::vector<int>> cells;
  std::vector<int> region;  // index into region_names, per cell
  std::vector<std::string> region_names;
  std::map<std::string, std::vector<FaceRef>> face_sets;
  std::map<std::string, std::vector<int>> node_sets;
  FibreField fibres;

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_cells() const { return cells.size(); }
  const std::string& region_of(int cell) const { return region_names[region[cell]]; }
  int region_index(const std::string& name);  // adds when missing
  NodeMatrix cell_nodes(int cell) const;

  /// Sorted unique nodes of a face set, or the node set of that name.
  std::vector<int> selection_nodes(const std::string& name) const;
  bool has_selection(const std::string& name) const;

  double volume(int order = 3) const;
  double region_volume(const std::string& name, int order = 3) const;
  /// Smallest distance between two nodes of one cell edge.
  double h_min() const;
  Vec3 bbox_min() const;
  Vec3 bbox_max() const;

  /// Checks indices, cell Jacobians at the Gauss points of `order`,
  /// face conformity and fibre normalization. Throws ValidationError.
  void validate(int order = 3) const;
};

struct BlockSpec {
  double L = 52.0008e-3, W = 13.75e-3, H = 5.5783e-3;  // m
};

struct GastrocSpec {
  double L_apo = 52.0008e-3;
  double lambda0 = 16.25e-3;
  double theta0 = 20.0 * M_PI / 180.0;
  double L_mus = 67.5e-3;
  double T_apo = 0.75e-3;
  double W_mus = 13.75e-3;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();  // solved when NaN
  double f_apo = 0.75;
  /// Muscle height; NaN means lambda0 sin(theta0). Required when theta0 = 0.
  double height = std::numeric_limits<double>::quiet_NaN();
};

struct Divisions {
  int nx = 1, ny = 1, nz = 1;
};

/// Returns gamma0 with lambda0 sin(theta0) = L_mus sin(theta0 - gamma0).
/// Throws GeometryInfeasible if no solution exists.
double solve_gamma0(const GastrocSpec& spec);

/// Muscle height and x-shear of the top face relative to the bottom.
struct GastrocLayout {
  double height, shear, gamma0, l_mus_derived;
  int apo_cells;  // cells along x covered by each aponeurosis
};
GastrocLayout gastroc_layout(const GastrocSpec& spec, int nx);

Mesh generate_block(const BlockSpec& spec, Divisions div, BasisKind kind = BasisKind::Q2,
                    const Vec3& fibre = Vec3::UnitX());
Mesh generate_gastroc(const GastrocSpec& spec, Divisions div,
                      BasisKind kind = BasisKind::Q2, int apo_layers = 1);

/// Analytic volume of the gastroc construction.
double gastroc_volume(const GastrocSpec& spec, int nx);

/// Splits every cell into eight, mapping through the isoparametric map.
Mesh refine(const Mesh& mesh);

/// Scales coordinates by diag(s); fibre directions are carried by the same
/// map and renormalized.
Mesh scale_mesh(const Mesh& mesh, const Vec3& s);

struct MeshReadOptions {
  bool auto_normalize = false;
  int validate_order = 3;
};

Mesh read_mesh(const std::string& text, const MeshReadOptions& opt = {});
Mesh import_mesh(const std::string& path, const MeshReadOptions& opt = {});
std::string write_mesh(const Mesh& mesh);
void export_mesh(const Mesh& mesh, const std::string& path);

}  // namespace myo
