// Small dense tensor helpers. Second-order tensors are dense 3x3; symmetric
// fourth-order tensors use Voigt 6x6 with ordering (11, 22, 33, 23, 13, 12).
// Stress-like quantities are stored without factors; strain-like vectors carry
// engineering shears, so h_eng . (C * g_eng) == h : C : g for symmetric h, g.
#pragma once

#include <Eigen/Dense>

namespace myo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Voigt6 = Eigen::Matrix<double, 6, 1>;
using Tangent6 = Eigen::Matrix<double, 6, 6>;

namespace voigt {

inline constexpr int kRow[6] = {0, 1, 2, 1, 0, 0};
inline constexpr int kCol[6] = {0, 1, 2, 2, 2, 1};

inline Voigt6 stress(const Mat3& s) {
  Voigt6 v;
  for (int I = 0; I < 6; ++I) v[I] = s(kRow[I], kCol[I]);
  return v;
}

/// Engineering-shear Voigt form of sym(g).
inline Voigt6 strain(const Mat3& g) {
  Voigt6 v;
  for (int I = 0; I < 6; ++I) {
    const int i = kRow[I], j = kCol[I];
    v[I] = (i == j) ? g(i, i) : g(i, j) + g(j, i);
  }
  return v;
}

inline Mat3 to_tensor(const Voigt6& v) {
  Mat3 s;
  s << v[0], v[5], v[4],
       v[5], v[1], v[3],
       v[4], v[3], v[2];
  return s;
}

/// (A ⊗ B)_IJ = A_I B_J for symmetric A, B.
inline Tangent6 outer(const Mat3& A, const Mat3& B) {
  return stress(A) * stress(B).transpose();
}

/// Fourth-order symmetric identity 𝕀.
inline Tangent6 sym_identity() {
  Tangent6 S = Tangent6::Zero();
  S.diagonal() << 1.0, 1.0, 1.0, 0.5, 0.5, 0.5;
  return S;
}

/// Spatial deviatoric projector 𝕡 = 𝕀 − (1/3) I ⊗ I.
inline Tangent6 dev_projector() {
  const Mat3 I = Mat3::Identity();
  return sym_identity() - outer(I, I) / 3.0;
}

/// Double contraction A : B of two minor-symmetric fourth-order tensors.
inline Tangent6 contract(const Tangent6& A, const Tangent6& B) {
  Voigt6 w;
  w << 1.0, 1.0, 1.0, 2.0, 2.0, 2.0;
  return A * w.asDiagonal() * B;
}

/// Full component c_ijkl of a Voigt tangent.
inline double component(const Tangent6& C, int i, int j, int k, int l) {
  auto index = [](int a, int b) {
    if (a == b) return a;
    const int s = a + b;  // (1,2)->3, (0,2)->4, (0,1)->5
    return s == 3 ? 3 : (s == 2 ? 4 : 5);
  };
  return C(index(i, j), index(k, l));
}

}  // namespace voigt

inline Mat3 dev(const Mat3& A) {
  return A - (A.trace() / 3.0) * Mat3::Identity();
}

inline Mat3 sym(const Mat3& A) { return 0.5 * (A + A.transpose()); }

}  // namespace myo
