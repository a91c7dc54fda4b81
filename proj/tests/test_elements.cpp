#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "myo/elements.hpp"
#include "myo/errors.hpp"

using namespace myo;

namespace {

NodeMatrix reference_nodes(BasisKind kind, const Mat3& A, const Vec3& b) {
  const int n = n_dofs(kind);
  NodeMatrix X(n, 3);
  for (int i = 0; i < n; ++i) X.row(i) = (A * (0.5 * (reference_node(kind, i) + Vec3::Ones())) + b).transpose();
  return X;
}

double integrate(const QuadratureRule& q, double (*f)(const Vec3&)) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.points.size(); ++i) s += q.weights[i] * f(q.points[i]);
  return s;
}

}  // namespace

TEST(Elements, DofCounts) {
  EXPECT_EQ(n_dofs(BasisKind::Q1), 8);
  EXPECT_EQ(n_dofs(BasisKind::Q2), 27);
  EXPECT_EQ(n_dofs(BasisKind::P0disc), 1);
  EXPECT_EQ(n_dofs(BasisKind::P1disc), 4);
}

TEST(Elements, Q1AtCentre) {
  const ShapeTable t = shape_eval(BasisKind::Q1, Vec3::Zero());
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(t.values[i], 0.125);
}

TEST(Elements, KroneckerProperty) {
  for (BasisKind kind : {BasisKind::Q1, BasisKind::Q2}) {
    const int n = n_dofs(kind);
    for (int i = 0; i < n; ++i) {
      const ShapeTable t = shape_eval(kind, reference_node(kind, i));
      for (int j = 0; j < n; ++j) EXPECT_NEAR(t.values[j], i == j ? 1.0 : 0.0, 1e-14);
    }
  }
}

TEST(Elements, MonomialPressureBasis) {
  const Vec3 xi(0.3, -0.2, 0.7);
  const ShapeTable t = shape_eval(BasisKind::P1disc, xi);
  EXPECT_DOUBLE_EQ(t.values[0], 1.0);
  EXPECT_DOUBLE_EQ(t.values[1], 0.3);
  EXPECT_DOUBLE_EQ(t.values[2], -0.2);
  EXPECT_DOUBLE_EQ(t.values[3], 0.7);
  EXPECT_DOUBLE_EQ(shape_eval(BasisKind::P0disc, xi).values[0], 1.0);
}

TEST(Elements, PartitionOfUnityAndGradientSum) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (BasisKind kind : {BasisKind::Q1, BasisKind::Q2})
    for (int t = 0; t < 20; ++t) {
      const ShapeTable s = shape_eval(kind, Vec3(U(rng), U(rng), U(rng)));
      EXPECT_NEAR(s.values.sum(), 1.0, 1e-12);
      EXPECT_LE(s.grads.colwise().sum().norm(), 1e-12);
    }
}

TEST(Elements, GradientsMatchFiniteDifferences) {
  const Vec3 xi(0.21, -0.43, 0.65);
  const double h = 1e-6;
  for (BasisKind kind : {BasisKind::Q1, BasisKind::Q2}) {
    const ShapeTable s = shape_eval(kind, xi);
    for (int d = 0; d < 3; ++d) {
      const Vec3 e = Vec3::Unit(d) * h;
      const Eigen::VectorXd fd =
          (shape_eval(kind, Vec3(xi + e)).values - shape_eval(kind, Vec3(xi - e)).values) / (2 * h);
      EXPECT_LE((fd - s.grads.col(d)).norm(), 1e-8);
    }
  }
}

TEST(Elements, GaussRules) {
  const QuadratureRule q1 = gauss_rule(1);
  ASSERT_EQ(q1.points.size(), 1u);
  EXPECT_DOUBLE_EQ(q1.weights[0], 8.0);
  EXPECT_EQ(q1.points[0], Vec3::Zero());
  const QuadratureRule q2 = gauss_rule(2);
  ASSERT_EQ(q2.points.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_DOUBLE_EQ(q2.weights[i], 1.0);
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(std::abs(q2.points[i][d]), 1.0 / std::sqrt(3.0), 1e-15);
  }
  EXPECT_EQ(gauss_rule(3).points.size(), 27u);
}

TEST(Elements, QuadratureExactness) {
  const QuadratureRule q3 = gauss_rule(3);
  // Odd integrand: exact zero.
  EXPECT_NEAR(integrate(q3, [](const Vec3& x) { return std::pow(x[0], 5); }), 0.0, 1e-15);
  // Degree 5 per axis is exact; x^4 y^2 z^2 integrates to 8 * (1/5)(1/3)(1/3).
  EXPECT_NEAR(integrate(q3, [](const Vec3& x) { return std::pow(x[0], 4) * x[1] * x[1] * x[2] * x[2]; }),
              8.0 / 45.0, 1e-14);
  // Degree 6 is not: the 3-point rule misses x^6.
  EXPECT_GT(std::abs(integrate(q3, [](const Vec3& x) { return std::pow(x[0], 6); }) - 8.0 / 7.0),
            1e-3);
  const QuadratureRule q2 = gauss_rule(2);
  EXPECT_GT(std::abs(integrate(q2, [](const Vec3& x) { return std::pow(x[0], 4); }) - 8.0 / 5.0), 1e-3);
}

TEST(Elements, IsoparametricUnitCube) {
  for (BasisKind kind : {BasisKind::Q1, BasisKind::Q2}) {
    const NodeMatrix X = reference_nodes(kind, Mat3::Identity(), Vec3::Zero());
    const NodeMatrix Y = reference_nodes(kind, Mat3::Identity(), Vec3(3.0, -1.0, 2.0));
    for (const Vec3& xi : gauss_rule(3).points) {
      EXPECT_NEAR(isoparametric_map(X, kind, xi).detJ_ref, 0.125, 1e-15);
      EXPECT_NEAR(isoparametric_map(Y, kind, xi).detJ_ref, 0.125, 1e-14);
    }
  }
}

TEST(Elements, ShearedCellHasConstantJacobian) {
  Mat3 A = Mat3::Identity();
  A(0, 2) = std::tan(0.3);  // x shifts with z
  const NodeMatrix X = reference_nodes(BasisKind::Q2, A, Vec3::Zero());
  for (const Vec3& xi : gauss_rule(3).points)
    EXPECT_NEAR(isoparametric_map(X, BasisKind::Q2, xi).detJ_ref, 0.125, 1e-14);
}

TEST(Elements, PatchTestReproducesAffineFields) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mat3 A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = (i == j ? 1.0 : 0.0) + 0.2 * U(rng);
  Mat3 G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = U(rng);
  const Vec3 c(U(rng), U(rng), U(rng));
  for (BasisKind kind : {BasisKind::Q1, BasisKind::Q2}) {
    const NodeMatrix X = reference_nodes(kind, A, Vec3(0.1, 0.2, 0.3));
    NodeMatrix u(X.rows(), 3);
    for (int i = 0; i < X.rows(); ++i) u.row(i) = (G * X.row(i).transpose() + c).transpose();
    for (const Vec3& xi : gauss_rule(3).points) {
      const MappedPoint mp = isoparametric_map(X, kind, xi);
      const Vec3 uh = u.transpose() * mp.values;
      EXPECT_LE((uh - (G * mp.x0 + c)).norm(), 1e-13);
      const Mat3 grad = u.transpose() * mp.grad0;
      EXPECT_LE((grad - G).norm(), 1e-12);
    }
  }
}

TEST(Elements, QuadratureVolume) {
  Mat3 A;
  A << 2.0, 0.3, 0.1, 0.0, 1.5, 0.2, 0.1, 0.0, 0.7;
  const NodeMatrix X = reference_nodes(BasisKind::Q2, A, Vec3::Zero());
  const QuadratureRule q = gauss_rule(3);
  double vol = 0.0;
  for (std::size_t i = 0; i < q.points.size(); ++i)
    vol += q.weights[i] * isoparametric_map(X, BasisKind::Q2, q.points[i]).detJ_ref;
  EXPECT_NEAR(vol, A.determinant(), 1e-12 * A.determinant());
}

TEST(Elements, InvertedCellIsNamed) {
  Mat3 A = Mat3::Identity();
  A(0, 0) = -1.0;
  const NodeMatrix X = reference_nodes(BasisKind::Q1, A, Vec3::Zero());
  try {
    isoparametric_map(X, BasisKind::Q1, Vec3::Zero(), 17);
    FAIL() << "expected InvertedCell";
  } catch (const InvertedCell& e) {
    EXPECT_EQ(e.cell(), 17);
  }
}

TEST(Elements, FaceNodes) {
  EXPECT_EQ(face_nodes(BasisKind::Q1, 0).size(), 4u);
  EXPECT_EQ(face_nodes(BasisKind::Q2, 5).size(), 9u);
  for (int f = 0; f < 6; ++f)
    for (int n : face_nodes(BasisKind::Q2, f)) {
      const Vec3 r = reference_node(BasisKind::Q2, n);
      EXPECT_DOUBLE_EQ(r[f / 2], f % 2 == 0 ? -1.0 : 1.0);
    }
}
