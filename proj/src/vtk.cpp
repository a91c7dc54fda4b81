#include "myo/vtk.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "myo/errors.hpp"

namespace myo {

namespace {

int lex_index(BasisKind kind, const Vec3& xi) {
  const int n = kind == BasisKind::Q2 ? 3 : 2;
  const double h = kind == BasisKind::Q2 ? 1.0 : 2.0;
  int idx[3];
  for (int d = 0; d < 3; ++d) idx[d] = static_cast<int>(std::lround((xi[d] + 1.0) / h));
  return idx[0] + n * idx[1] + n * n * idx[2];
}

void put(std::string& out, const char* fmt, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

}  // namespace

std::vector<int> vtk_order(BasisKind kind) {
  const std::array<Vec3, 8> corner = {Vec3(-1, -1, -1), Vec3(1, -1, -1), Vec3(1, 1, -1),
                                      Vec3(-1, 1, -1),  Vec3(-1, -1, 1), Vec3(1, -1, 1),
                                      Vec3(1, 1, 1),    Vec3(-1, 1, 1)};
  std::vector<Vec3> pts(corner.begin(), corner.end());
  if (kind == BasisKind::Q2) {
    const int edges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    for (const auto& e : edges) pts.push_back(0.5 * (corner[e[0]] + corner[e[1]]));
    const Vec3 faces[6] = {Vec3(-1, 0, 0), Vec3(1, 0, 0), Vec3(0, -1, 0),
                           Vec3(0, 1, 0),  Vec3(0, 0, -1), Vec3(0, 0, 1)};
    for (const auto& f : faces) pts.push_back(f);
    pts.push_back(Vec3::Zero());
  }
  std::vector<int> order;
  for (const auto& p : pts) order.push_back(lex_index(kind, p));
  return order;
}

std::string vtk_document(const Assembler& a, const SystemState& state, const std::string& title) {
  const Mesh& mesh = a.mesh();
  const DofMap& dofs = a.dofs();
  const int nn = static_cast<int>(mesh.n_nodes());
  const int nc = static_cast<int>(mesh.n_cells());

  AssemblyContext ctx;
  ctx.mode = Mode::quasistatic;
  ctx.activation = state.activation.empty() ? nullptr : &state.activation;
  const auto samples = a.sample(state.x, ctx);
  std::vector<double> vol(nc, 0.0), J(nc, 0.0), p(nc, 0.0);
  std::vector<Vec3> fib(nc, Vec3::Zero());
  for (const auto& s : samples) {
    vol[s.cell] += s.weight;
    J[s.cell] += s.weight * s.dp.J;
    p[s.cell] += s.weight * s.p;
    if (s.dp.has_fibre) fib[s.cell] += s.weight * s.dp.a0;
  }
  for (int c = 0; c < nc; ++c) {
    J[c] /= vol[c];
    p[c] /= vol[c];
    const double n = fib[c].norm();
    if (n > 0.0) fib[c] /= n;
  }

  std::string out;
  out.reserve(static_cast<std::size_t>(nn) * 200);
  out += "# vtk DataFile Version 3.0\n";
  out += title.substr(0, 255) + "\n";
  out += "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nn) + " double\n";
  for (const auto& X : mesh.nodes) {
    put(out, "%.17g", X[0]);
    put(out, " %.17g", X[1]);
    put(out, " %.17g\n", X[2]);
  }
  const auto order = vtk_order(mesh.kind);
  const int npc = static_cast<int>(order.size());
  out += "CELLS " + std::to_string(nc) + " " + std::to_string(nc * (npc + 1)) + "\n";
  for (const auto& cell : mesh.cells) {
    out += std::to_string(npc);
    for (int k : order) out += " " + std::to_string(cell[k]);
    out += "\n";
  }
  const std::string type = mesh.kind == BasisKind::Q2 ? "29\n" : "12\n";
  out += "CELL_TYPES " + std::to_string(nc) + "\n";
  for (int c = 0; c < nc; ++c) out += type;

  out += "POINT_DATA " + std::to_string(nn) + "\n";
  out += "VECTORS displacement double\n";
  for (int n = 0; n < nn; ++n) {
    put(out, "%.17g", state.x[dofs.u(n, 0)]);
    put(out, " %.17g", state.x[dofs.u(n, 1)]);
    put(out, " %.17g\n", state.x[dofs.u(n, 2)]);
  }
  auto point_scalar = [&](const char* name, auto f) {
    out += std::string("SCALARS ") + name + " double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < nn; ++n) put(out, "%.17g\n", f(n));
  };
  point_scalar("displacement_magnitude", [&](int n) {
    return Vec3(state.x[dofs.u(n, 0)], state.x[dofs.u(n, 1)], state.x[dofs.u(n, 2)]).norm();
  });
  point_scalar("ux", [&](int n) { return state.x[dofs.u(n, 0)]; });
  point_scalar("uy", [&](int n) { return state.x[dofs.u(n, 1)]; });
  point_scalar("uz", [&](int n) { return state.x[dofs.u(n, 2)]; });

  out += "CELL_DATA " + std::to_string(nc) + "\n";
  auto cell_scalar = [&](const char* name, auto f) {
    out += std::string("SCALARS ") + name + " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c) put(out, "%.17g\n", f(c));
  };
  cell_scalar("J", [&](int c) { return J[c]; });
  cell_scalar("p", [&](int c) { return p[c]; });
  cell_scalar("activation",
              [&](int c) { return state.activation.empty() ? 0.0 : state.activation[c]; });
  cell_scalar("region", [&](int c) { return static_cast<double>(mesh.region[c]); });
  out += "VECTORS fibre_direction double\n";
  for (int c = 0; c < nc; ++c) {
    put(out, "%.17g", fib[c][0]);
    put(out, " %.17g", fib[c][1]);
    put(out, " %.17g\n", fib[c][2]);
  }
  return out;
}

void write_vtk(const Assembler& a, const SystemState& state, const std::string& path,
               const std::string& title) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << vtk_document(a, state, title);
  if (!f) throw Error("failed writing '" + path + "'");
}

}  // namespace myo
