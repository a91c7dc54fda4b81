#include "myo/mesh.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "myo/errors.hpp"

namespace myo {

bool FibreField::has(int cell, const std::string& region) const {
  if (!per_point.empty() && !per_point[cell].empty()) return true;
  if (!per_cell.empty()) return true;
  return per_region.count(region) > 0;
}

Vec3 FibreField::at(int cell, const std::string& region, int qp, int order) const {
  if (!per_point.empty() && !per_point[cell].empty()) {
    if (order != point_order)
      throw ValidationError("fibre data given for Gauss order " +
                            std::to_string(point_order) + ", requested " +
                            std::to_string(order));
    return per_point[cell][qp];
  }
  if (!per_cell.empty()) return per_cell[cell];
  return per_region.at(region);
}

int Mesh::region_index(const std::string& name) {
  auto it = std::find(region_names.begin(), region_names.end(), name);
  if (it != region_names.end()) return static_cast<int>(it - region_names.begin());
  region_names.push_back(name);
  return static_cast<int>(region_names.size()) - 1;
}

NodeMatrix Mesh::cell_nodes(int cell) const {
  const auto& c = cells[cell];
  NodeMatrix X(c.size(), 3);
  for (std::size_t a = 0; a < c.size(); ++a) X.row(a) = nodes[c[a]].transpose();
  return X;
}

bool Mesh::has_selection(const std::string& name) const {
  return face_sets.count(name) || node_sets.count(name);
}

std::vector<int> Mesh::selection_nodes(const std::string& name) const {
  std::set<int> out;
  if (auto it = face_sets.find(name); it != face_sets.end()) {
    for (const auto& f : it->second)
      for (int a : face_nodes(kind, f.face)) out.insert(cells[f.cell][a]);
  } else if (auto nt = node_sets.find(name); nt != node_sets.end()) {
    out.insert(nt->second.begin(), nt->second.end());
  } else {
    throw ValidationError("unknown face/node set '" + name + "'");
  }
  return {out.begin(), out.end()};
}

double Mesh::volume(int order) const {
  const QuadratureRule q = gauss_rule(order);
  const auto shapes = shape_eval(kind, q.points);
  double v = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const NodeMatrix X = cell_nodes(static_cast<int>(c));
    for (std::size_t g = 0; g < q.points.size(); ++g)
      v += q.weights[g] * (X.transpose() * shapes[g].grads).determinant();
  }
  return v;
}

double Mesh::region_volume(const std::string& name, int order) const {
  const QuadratureRule q = gauss_rule(order);
  const auto shapes = shape_eval(kind, q.points);
  double v = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (region_of(static_cast<int>(c)) != name) continue;
    const NodeMatrix X = cell_nodes(static_cast<int>(c));
    for (std::size_t g = 0; g < q.points.size(); ++g)
      v += q.weights[g] * (X.transpose() * shapes[g].grads).determinant();
  }
  return v;
}

double Mesh::h_min() const {
  const int m = nodes_per_edge(kind);
  const int corner[2] = {0, m - 1};
  double h = std::numeric_limits<double>::infinity();
  for (const auto& c : cells) {
    auto idx = [m](int i, int j, int k) { return i + m * (j + m * k); };
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const int A = corner[a], B = corner[b];
        h = std::min(h, (nodes[c[idx(0, A, B)]] - nodes[c[idx(m - 1, A, B)]]).norm());
        h = std::min(h, (nodes[c[idx(A, 0, B)]] - nodes[c[idx(A, m - 1, B)]]).norm());
        h = std::min(h, (nodes[c[idx(A, B, 0)]] - nodes[c[idx(A, B, m - 1)]]).norm());
      }
  }
  return h;
}

Vec3 Mesh::bbox_min() const {
  Vec3 b = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& x : nodes) b = b.cwiseMin(x);
  return b;
}

Vec3 Mesh::bbox_max() const {
  Vec3 b = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& x : nodes) b = b.cwiseMax(x);
  return b;
}

namespace {

using FaceKey = std::vector<int>;

FaceKey face_key(const Mesh& m, int cell, int face) {
  FaceKey k;
  for (int a : face_nodes(m.kind, face)) k.push_back(m.cells[cell][a]);
  std::sort(k.begin(), k.end());
  return k;
}

std::map<FaceKey, std::vector<FaceRef>> face_map(const Mesh& m) {
  std::map<FaceKey, std::vector<FaceRef>> faces;
  for (int c = 0; c < static_cast<int>(m.cells.size()); ++c)
    for (int f = 0; f < 6; ++f) faces[face_key(m, c, f)].push_back({c, f});
  return faces;
}

}  // namespace

void Mesh::validate(int order) const {
  const int nper = n_dofs(kind);
  if (region.size() != cells.size())
    throw ValidationError("region tags do not match cell count");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (static_cast<int>(cells[c].size()) != nper)
      throw ValidationError("cell " + std::to_string(c) + " has " +
                            std::to_string(cells[c].size()) + " nodes, expected " +
                            std::to_string(nper));
    for (int n : cells[c])
      if (n < 0 || n >= static_cast<int>(nodes.size()))
        throw ValidationError("cell " + std::to_string(c) + " references node " +
                              std::to_string(n) + " out of range");
    if (region[c] < 0 || region[c] >= static_cast<int>(region_names.size()))
      throw ValidationError("cell " + std::to_string(c) + " has a bad region index");
  }
  for (const auto& [name, faces] : face_sets)
    for (const auto& f : faces)
      if (f.cell < 0 || f.cell >= static_cast<int>(cells.size()) || f.face < 0 ||
          f.face > 5)
        throw ValidationError("face set '" + name + "' references " +
                              std::to_string(f.cell) + ":" + std::to_string(f.face));
  for (const auto& [name, ns] : node_sets)
    for (int n : ns)
      if (n < 0 || n >= static_cast<int>(nodes.size()))
        throw ValidationError("node set '" + name + "' references node " +
                              std::to_string(n));

  const QuadratureRule q = gauss_rule(order);
  const auto shapes = shape_eval(kind, q.points);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const NodeMatrix X = cell_nodes(static_cast<int>(c));
    for (const auto& s : shapes) {
      const double det = (X.transpose() * s.grads).determinant();
      if (!(det > 0.0))
        throw ValidationError("cell " + std::to_string(c) +
                              " is inverted (reference Jacobian " +
                              std::to_string(det) + ")");
    }
  }

  for (const auto& [key, refs] : face_map(*this)) {
    if (refs.size() > 2)
      throw ValidationError("face shared by more than two cells (cell " +
                            std::to_string(refs[0].cell) + ")");
  }
  // Conformity: a face sharing all its corner nodes with another must share
  // every node.
  std::map<FaceKey, FaceRef> by_corners;
  const int m = nodes_per_edge(kind);
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int f = 0; f < 6; ++f) {
      const auto fn = face_nodes(kind, f);
      FaceKey corners = {cells[c][fn[0]], cells[c][fn[m - 1]],
                         cells[c][fn[m * (m - 1)]], cells[c][fn[m * m - 1]]};
      std::sort(corners.begin(), corners.end());
      auto [it, inserted] = by_corners.emplace(corners, FaceRef{c, f});
      if (!inserted && face_key(*this, c, f) !=
                           face_key(*this, it->second.cell, it->second.face))
        throw ValidationError("non-conforming face between cells " +
                              std::to_string(it->second.cell) + " and " +
                              std::to_string(c));
    }

  auto check_unit = [](const Vec3& a, const std::string& where) {
    if (std::abs(a.norm() - 1.0) > 1e-6)
      throw ValidationError("fibre vector at " + where + " has norm " +
                            std::to_string(a.norm()));
  };
  for (const auto& [name, a] : fibres.per_region) check_unit(a, "region " + name);
  if (!fibres.per_cell.empty() && fibres.per_cell.size() != cells.size())
    throw ValidationError("per-cell fibre count does not match cells");
  for (std::size_t c = 0; c < fibres.per_cell.size(); ++c)
    check_unit(fibres.per_cell[c], "cell " + std::to_string(c));
  if (!fibres.per_point.empty()) {
    if (fibres.per_point.size() != cells.size())
      throw ValidationError("per-point fibre data does not cover all cells");
    const std::size_t nq = static_cast<std::size_t>(fibres.point_order) *
                           fibres.point_order * fibres.point_order;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (fibres.per_point[c].size() != nq)
        throw ValidationError("cell " + std::to_string(c) +
                              " has incomplete per-point fibre data");
      for (std::size_t g = 0; g < nq; ++g)
        check_unit(fibres.per_point[c][g],
                   "cell " + std::to_string(c) + " point " + std::to_string(g));
    }
  }
}

// --- Generators ---------------------------------------------------------------

namespace {

class LatticeBuilder {
 public:
  explicit LatticeBuilder(Mesh& m) : mesh_(m), order_(nodes_per_edge(m.kind) - 1) {}

  /// Adds nx*ny*nz cells; pos(u,v,w) maps lattice fractions in [0,1] to space.
  /// Returns the first new cell index.
  int add(int nx, int ny, int nz, const std::string& region,
          const std::function<Vec3(double, double, double)>& pos) {
    const int m = order_;
    const int first = static_cast<int>(mesh_.cells.size());
    const int rid = mesh_.region_index(region);
    const int Nx = nx * m + 1, Ny = ny * m + 1, Nz = nz * m + 1;
    std::vector<int> ids(static_cast<std::size_t>(Nx) * Ny * Nz);
    for (int k = 0; k < Nz; ++k)
      for (int j = 0; j < Ny; ++j)
        for (int i = 0; i < Nx; ++i) {
          const Vec3 x = pos(static_cast<double>(i) / (Nx - 1),
                             static_cast<double>(j) / (Ny - 1),
                             static_cast<double>(k) / (Nz - 1));
          ids[i + Nx * (j + Ny * k)] = node(x);
        }
    for (int ck = 0; ck < nz; ++ck)
      for (int cj = 0; cj < ny; ++cj)
        for (int ci = 0; ci < nx; ++ci) {
          std::vector<int> c;
          for (int k = 0; k <= m; ++k)
            for (int j = 0; j <= m; ++j)
              for (int i = 0; i <= m; ++i)
                c.push_back(ids[(ci * m + i) + Nx * ((cj * m + j) + Ny * (ck * m + k))]);
          mesh_.cells.push_back(std::move(c));
          mesh_.region.push_back(rid);
        }
    return first;
  }

 private:
  int node(const Vec3& x) {
    const std::array<double, 3> key = {x[0], x[1], x[2]};
    auto [it, inserted] = index_.emplace(key, static_cast<int>(mesh_.nodes.size()));
    if (inserted) mesh_.nodes.push_back(x);
    return it->second;
  }

  Mesh& mesh_;
  int order_;
  std::map<std::array<double, 3>, int> index_;
};

const char* kFaceNames[6] = {"-x", "+x", "-y", "+y", "-z", "+z"};

void tag_boundary(Mesh& m) {
  for (const auto& [key, refs] : face_map(m)) {
    if (refs.size() != 1) continue;
    m.face_sets[kFaceNames[refs[0].face]].push_back(refs[0]);
  }
  for (auto& [name, faces] : m.face_sets) std::sort(faces.begin(), faces.end());
}

void check_divisions(const Divisions& d) {
  if (d.nx < 1 || d.ny < 1 || d.nz < 1)
    throw ValidationError("divisions must be at least 1 per axis");
}

}  // namespace

Mesh generate_block(const BlockSpec& spec, Divisions div, BasisKind kind,
                    const Vec3& fibre) {
  check_divisions(div);
  if (!(spec.L > 0 && spec.W > 0 && spec.H > 0))
    throw ValidationError("block dimensions must be positive");
  Mesh m;
  m.kind = kind;
  LatticeBuilder b(m);
  b.add(div.nx, div.ny, div.nz, "muscle", [&](double u, double v, double w) {
    return Vec3(u * spec.L, v * spec.W, w * spec.H);
  });
  tag_boundary(m);
  m.fibres.per_region["muscle"] = fibre.normalized();
  return m;
}

double solve_gamma0(const GastrocSpec& s) {
  if (!(s.L_mus > 0.0)) throw GeometryInfeasible("L_mus must be positive");
  const double ratio = s.lambda0 * std::sin(s.theta0) / s.L_mus;
  if (ratio > 1.0 || ratio < -1.0)
    throw GeometryInfeasible("no gamma0 satisfies lambda0 sin(theta0) = "
                             "L_mus sin(theta0 - gamma0)");
  return s.theta0 - std::asin(ratio);
}

GastrocLayout gastroc_layout(const GastrocSpec& s, int nx) {
  if (!(s.L_apo > 0 && s.lambda0 > 0 && s.T_apo > 0 && s.W_mus > 0))
    throw GeometryInfeasible("gastroc lengths must be positive");
  if (s.theta0 < 0.0 || s.theta0 >= M_PI / 2)
    throw GeometryInfeasible("theta0 must lie in [0, pi/2)");
  GastrocLayout g;
  if (std::isnan(s.gamma0)) {
    g.gamma0 = solve_gamma0(s);
  } else {
    g.gamma0 = s.gamma0;
    const double lhs = s.lambda0 * std::sin(s.theta0);
    const double rhs = s.L_mus * std::sin(s.theta0 - s.gamma0);
    if (std::abs(lhs - rhs) > 1e-9 * std::max(std::abs(lhs), 1e-300))
      throw GeometryInfeasible("gamma0 violates the closure relation");
  }
  if (std::isnan(s.height)) {
    if (s.theta0 == 0.0)
      throw GeometryInfeasible("theta0 = 0 needs an explicit muscle height");
    g.height = s.lambda0 * std::sin(s.theta0);
    g.shear = s.lambda0 * std::cos(s.theta0);
  } else {
    g.height = s.height;
    g.shear = s.theta0 == 0.0 ? 0.0 : s.height / std::tan(s.theta0);
  }
  g.l_mus_derived = std::hypot(s.L_apo + g.shear, g.height);
  if (!(s.f_apo > 0.0 && s.f_apo <= 1.0))
    throw GeometryInfeasible("f_apo must lie in (0, 1]");
  g.apo_cells = std::clamp(static_cast<int>(std::lround(s.f_apo * nx)), 1, nx);
  return g;
}

double gastroc_volume(const GastrocSpec& s, int nx) {
  const GastrocLayout g = gastroc_layout(s, nx);
  const double covered = s.L_apo * g.apo_cells / nx;
  return s.L_apo * g.height * s.W_mus + 2.0 * covered * s.T_apo * s.W_mus;
}

Mesh generate_gastroc(const GastrocSpec& s, Divisions div, BasisKind kind, int apo_layers) {
  check_divisions(div);
  if (apo_layers < 1) throw ValidationError("apo_layers must be at least 1");
  const GastrocLayout g = gastroc_layout(s, div.nx);
  Mesh m;
  m.kind = kind;
  LatticeBuilder b(m);
  const double H = g.height, S = g.shear, L = s.L_apo, W = s.W_mus, T = s.T_apo;
  // Fractions of covered length, consistent with muscle lattice x positions.
  const int na = g.apo_cells;
  b.add(div.nx, div.ny, div.nz, "muscle", [&](double u, double v, double w) {
    return Vec3(u * L + w * S, v * W, w * H);
  });
  const int mo = nodes_per_edge(kind) - 1;
  const int Nx = div.nx * mo;
  // Same lattice fraction arithmetic as the muscle block so shared nodes match.
  auto xfrac = [&](double u, int offset_cells) {
    const double idx = std::round(u * (na * mo)) + offset_cells * mo;
    return idx / Nx;
  };
  const int bottom = b.add(na, div.ny, apo_layers, "aponeurosis",
                           [&](double u, double v, double w) {
                             return Vec3(xfrac(u, 0) * L, v * W, (w - 1.0) * T);
                           });
  const int top = b.add(na, div.ny, apo_layers, "aponeurosis",
                        [&](double u, double v, double w) {
                          return Vec3(xfrac(u, div.nx - na) * L + 1.0 * S, v * W,
                                      1.0 * H + w * T);
                        });
  tag_boundary(m);
  const int n_bottom = na * div.ny * apo_layers;
  for (const auto& f : m.face_sets["-x"])
    if (f.cell >= bottom && f.cell < bottom + n_bottom) m.face_sets["apo_bottom_-x"].push_back(f);
  for (const auto& f : m.face_sets["+x"])
    if (f.cell >= top) m.face_sets["apo_top_+x"].push_back(f);
  m.fibres.per_region["muscle"] = Vec3(std::cos(s.theta0), 0.0, std::sin(s.theta0));
  m.fibres.per_region["aponeurosis"] = Vec3::UnitX();
  return m;
}

Mesh refine(const Mesh& mesh) {
  Mesh out;
  out.kind = mesh.kind;
  out.region_names = mesh.region_names;
  out.fibres.per_region = mesh.fibres.per_region;
  if (!mesh.fibres.per_point.empty())
    throw ValidationError("refine: per-point fibre data cannot be transferred");
  const int n = n_dofs(mesh.kind);
  std::map<std::array<long long, 3>, int> index;
  const Vec3 lo = mesh.bbox_min();
  const double scale = (mesh.bbox_max() - lo).maxCoeff();
  auto node = [&](const Vec3& x) {
    // Quantize to absorb round-off between neighbouring cells' maps.
    std::array<long long, 3> key;
    for (int a = 0; a < 3; ++a) key[a] = std::llround((x[a] - lo[a]) / scale * 1e10);
    auto [it, ins] = index.emplace(key, static_cast<int>(out.nodes.size()));
    if (ins) out.nodes.push_back(x);
    return it->second;
  };
  std::map<FaceRef, std::vector<FaceRef>> children;
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
    const NodeMatrix X = mesh.cell_nodes(c);
    for (int sk = 0; sk < 2; ++sk)
      for (int sj = 0; sj < 2; ++sj)
        for (int si = 0; si < 2; ++si) {
          std::vector<int> cell(n);
          for (int a = 0; a < n; ++a) {
            const Vec3 r = reference_node(mesh.kind, a);
            const Vec3 xi(0.5 * (r[0] + 2 * si - 1), 0.5 * (r[1] + 2 * sj - 1),
                          0.5 * (r[2] + 2 * sk - 1));
            const Vec3 x = X.transpose() * shape_eval(mesh.kind, xi).values;
            cell[a] = node(x);
          }
          const int child = static_cast<int>(out.cells.size());
          out.cells.push_back(std::move(cell));
          out.region.push_back(mesh.region[c]);
          if (!mesh.fibres.per_cell.empty()) out.fibres.per_cell.push_back(mesh.fibres.per_cell[c]);
          const int sub[3] = {si, sj, sk};
          for (int f = 0; f < 6; ++f)
            if (sub[f / 2] == f % 2) children[{c, f}].push_back({child, f});
        }
  }
  for (const auto& [name, faces] : mesh.face_sets) {
    auto& dst = out.face_sets[name];
    for (const auto& f : faces) {
      const auto& ch = children[f];
      dst.insert(dst.end(), ch.begin(), ch.end());
    }
  }
  return out;
}

Mesh scale_mesh(const Mesh& mesh, const Vec3& s) {
  Mesh out = mesh;
  for (auto& x : out.nodes) x = x.cwiseProduct(s);
  auto map = [&](Vec3& a) { a = a.cwiseProduct(s).normalized(); };
  for (auto& [name, a] : out.fibres.per_region) map(a);
  for (auto& a : out.fibres.per_cell) map(a);
  for (auto& cell : out.fibres.per_point)
    for (auto& a : cell) map(a);
  return out;
}

}  // namespace myo
