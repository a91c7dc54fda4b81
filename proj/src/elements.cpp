#include "myo/elements.hpp"

#include <cmath>
#include <stdexcept>

#include "myo/errors.hpp"

namespace myo {

int n_dofs(BasisKind kind) {
  switch (kind) {
    case BasisKind::Q1: return 8;
    case BasisKind::Q2: return 27;
    case BasisKind::P0disc: return 1;
    case BasisKind::P1disc: return 4;
  }
  return 0;
}

int nodes_per_edge(BasisKind kind) {
  switch (kind) {
    case BasisKind::Q1: return 2;
    case BasisKind::Q2: return 3;
    default: throw std::invalid_argument("not a Lagrange basis");
  }
}

namespace {

// 1D Lagrange values and derivatives at t.
void lagrange1d(int n, double t, double* v, double* d) {
  if (n == 2) {
    v[0] = 0.5 * (1.0 - t);
    v[1] = 0.5 * (1.0 + t);
    d[0] = -0.5;
    d[1] = 0.5;
  } else {
    v[0] = 0.5 * t * (t - 1.0);
    v[1] = 1.0 - t * t;
    v[2] = 0.5 * t * (t + 1.0);
    d[0] = t - 0.5;
    d[1] = -2.0 * t;
    d[2] = t + 0.5;
  }
}

}  // namespace

ShapeTable shape_eval(BasisKind kind, const Vec3& xi) {
  ShapeTable s;
  const int n = n_dofs(kind);
  s.values.resize(n);
  s.grads.resize(n, 3);
  switch (kind) {
    case BasisKind::P0disc:
      s.values[0] = 1.0;
      s.grads.setZero();
      return s;
    case BasisKind::P1disc:
      s.values << 1.0, xi[0], xi[1], xi[2];
      s.grads.setZero();
      s.grads(1, 0) = s.grads(2, 1) = s.grads(3, 2) = 1.0;
      return s;
    default: break;
  }
  const int m = nodes_per_edge(kind);
  double v[3][3], d[3][3];
  for (int a = 0; a < 3; ++a) lagrange1d(m, xi[a], v[a], d[a]);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const int idx = i + m * (j + m * k);
        s.values[idx] = v[0][i] * v[1][j] * v[2][k];
        s.grads(idx, 0) = d[0][i] * v[1][j] * v[2][k];
        s.grads(idx, 1) = v[0][i] * d[1][j] * v[2][k];
        s.grads(idx, 2) = v[0][i] * v[1][j] * d[2][k];
      }
  return s;
}

std::vector<ShapeTable> shape_eval(BasisKind kind, const std::vector<Vec3>& xi) {
  std::vector<ShapeTable> out;
  out.reserve(xi.size());
  for (const auto& x : xi) out.push_back(shape_eval(kind, x));
  return out;
}

Vec3 reference_node(BasisKind kind, int idx) {
  const int m = nodes_per_edge(kind);
  const int i = idx % m, j = (idx / m) % m, k = idx / (m * m);
  const double step = 2.0 / (m - 1);
  return {-1.0 + step * i, -1.0 + step * j, -1.0 + step * k};
}

QuadratureRule gauss_rule(int order) {
  std::vector<double> x, w;
  switch (order) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      x = {-a, a};
      w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(0.6);
      x = {-a, 0.0, a};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double r = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
      const double a = std::sqrt(3.0 / 7.0 - r), b = std::sqrt(3.0 / 7.0 + r);
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0, wb = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-b, -a, a, b};
      w = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double r = 2.0 * std::sqrt(10.0 / 7.0);
      const double a = std::sqrt(5.0 - r) / 3.0, b = std::sqrt(5.0 + r) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      x = {-b, -a, 0.0, a, b};
      w = {wb, wa, 128.0 / 225.0, wa, wb};
      break;
    }
    default: throw std::invalid_argument("gauss_rule: order must be 1..5");
  }
  QuadratureRule q;
  q.order = order;
  for (int k = 0; k < order; ++k)
    for (int j = 0; j < order; ++j)
      for (int i = 0; i < order; ++i) {
        q.points.emplace_back(x[i], x[j], x[k]);
        q.weights.push_back(w[i] * w[j] * w[k]);
      }
  return q;
}

MappedPoint isoparametric_map(const NodeMatrix& nodes, const ShapeTable& shape, long cell) {
  MappedPoint m;
  m.values = shape.values;
  m.x0 = nodes.transpose() * shape.values;
  m.J_ref = nodes.transpose() * shape.grads;
  m.detJ_ref = m.J_ref.determinant();
  if (!(m.detJ_ref > 0.0)) throw InvertedCell(cell, m.detJ_ref);
  m.grad0 = shape.grads * m.J_ref.inverse();
  return m;
}

MappedPoint isoparametric_map(const NodeMatrix& nodes, BasisKind kind, const Vec3& xi,
                              long cell) {
  return isoparametric_map(nodes, shape_eval(kind, xi), cell);
}

std::vector<int> face_nodes(BasisKind kind, int face) {
  const int m = nodes_per_edge(kind);
  const int axis = face / 2;
  const int level = (face % 2) ? m - 1 : 0;
  std::vector<int> out;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const int ijk[3] = {i, j, k};
        if (ijk[axis] == level) out.push_back(i + m * (j + m * k));
      }
  return out;
}

}  // namespace myo
