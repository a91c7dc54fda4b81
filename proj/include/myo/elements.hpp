// Reference hexahedron [-1,1]^3: Lagrange bases, discontinuous monomial
// bases, tensor Gauss rules and the isoparametric map.
//
// Lagrange nodes are numbered lexicographically: Q1 node (i,j,k) with
// i,j,k in {0,1} is i + 2j + 4k; Q2 node (i,j,k) in {0,1,2} is i + 3j + 9k,
// with 1D node coordinates -1, 0, +1.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "myo/tensor.hpp"

namespace myo {

enum class BasisKind { Q1, Q2, P0disc, P1disc };

int n_dofs(BasisKind kind);
/// Number of nodes along one edge (2 for Q1, 3 for Q2).
int nodes_per_edge(BasisKind kind);

using ShapeValues = Eigen::VectorXd;
using ShapeGrads = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct ShapeTable {
  ShapeValues values;
  ShapeGrads grads;  // reference gradients, one row per dof
};

ShapeTable shape_eval(BasisKind kind, const Vec3& xi);
std::vector<ShapeTable> shape_eval(BasisKind kind, const std::vector<Vec3>& xi);

/// Reference coordinates of Lagrange node i.
Vec3 reference_node(BasisKind kind, int i);

struct QuadratureRule {
  int order = 0;  // points per axis
  std::vector<Vec3> points;
  std::vector<double> weights;
};

/// Tensor-product Gauss-Legendre rule with `order` points per axis (1..5).
QuadratureRule gauss_rule(int order);

using NodeMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct MappedPoint {
  Vec3 x0;
  Mat3 J_ref;  // dx0/dxi
  double detJ_ref = 0.0;
  ShapeGrads grad0;  // physical gradients, one row per shape function
  ShapeValues values;
};

/// `nodes` has one row per Lagrange node of `kind`. Throws InvertedCell
/// (tagged with `cell`) when the map Jacobian is not positive.
MappedPoint isoparametric_map(const NodeMatrix& nodes, BasisKind kind, const Vec3& xi,
                              long cell = -1);
MappedPoint isoparametric_map(const NodeMatrix& nodes, const ShapeTable& shape,
                              long cell = -1);

/// Local face numbering: 0 -xi, 1 +xi, 2 -eta, 3 +eta, 4 -zeta, 5 +zeta.
/// Lagrange nodes lying on face f.
std::vector<int> face_nodes(BasisKind kind, int face);

}  // namespace myo
