#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "myo/constitutive.hpp"
#include "myo/kinematics.hpp"
#include "myo/materials.hpp"

using namespace myo;

namespace {

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> N;
  Eigen::Quaterniond q(N(rng), N(rng), N(rng), N(rng));
  return q.normalized().toRotationMatrix();
}

Mat3 random_F(std::mt19937& rng, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  Mat3 F = Mat3::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) F(i, j) += U(rng);
  return F;
}

DeformationPoint fibre_point(const Mat3& F, const Vec3& a0) {
  return fibre_measures(from_deformation(F), a0);
}

// Kirchhoff-stress increment for F -> (I + eps g) F, i.e. velocity gradient g.
Mat3 directional_fd(const Mat3& F, const Vec3& a0, const Mat3& g, double p, double act,
                    const TissueParams& par, const EvalOptions& opt) {
  const double h = 1e-6;
  const Mat3 I = Mat3::Identity();
  const Mat3 tp = evaluate_stress(fibre_point((I + h * g) * F, a0), {}, p, act, par, opt).tau;
  const Mat3 tm = evaluate_stress(fibre_point((I - h * g) * F, a0), {}, p, act, par, opt).tau;
  return (tp - tm) / (2 * h);
}

}  // namespace

TEST(Constitutive, MuscleFibreStressNormalization) {
  const TissueParams m = default_muscle();
  EXPECT_EQ(muscle_fibre_stress(1.0, 0.0, 0.0, m).total, 0.0);
  const double len1 = active_force_length(1.0, 0.0);
  EXPECT_DOUBLE_EQ(muscle_fibre_stress(1.0, 0.0, 1.0, m).total, m.sigma0 * len1);
  EXPECT_DOUBLE_EQ(muscle_fibre_stress(1.0, 0.75 * m.epsbar0, 1.0, m).total,
                   m.sigma0 * 1.5950 * len1);
  EXPECT_DOUBLE_EQ(muscle_fibre_stress(1.0, 2.0 * m.epsbar0, 1.0, m, default_curves(), true).total,
                   m.sigma0 * len1);
}

TEST(Constitutive, RestAndPurePressure) {
  const TissueParams m = default_muscle();
  const DeformationPoint rest = fibre_point(Mat3::Identity(), Vec3::UnitX());
  EXPECT_LE(evaluate_stress(rest, {}, 0.0, 0.0, m).tau.norm(), 1e-14 * m.yeoh_cell.c1);
  const Mat3 tau = evaluate_stress(rest, {}, 5e3, 0.0, m).tau;
  EXPECT_LE((tau - 5e3 * Mat3::Identity()).norm(), 1e-9);
}

TEST(Constitutive, FibrePartMatchesFibreStress) {
  TissueParams m = default_muscle();
  const double s = 1.0 / std::sqrt(1.2);
  const DeformationPoint dp = fibre_point(Vec3(1.2, s, s).asDiagonal(), Vec3::UnitX());
  const StressPoint sp = evaluate_stress(dp, {}, 0.0, 1.0, m);
  const FibreStress fs = muscle_fibre_stress(1.2, 0.0, 1.0, m);
  const Mat3 fibre = sp.decomposition.fibre_active + sp.decomposition.fibre_passive;
  // dev(w s e1 e1) has xx component 2/3 w s.
  EXPECT_NEAR(fibre(0, 0), 2.0 / 3.0 * m.fibre_weight() * fs.total, 1e-8 * fs.total);
  EXPECT_NEAR(fibre(0, 0) - fibre(1, 1), m.fibre_weight() * fs.total, 1e-8 * fs.total);
}

TEST(Constitutive, DecompositionAndDeviatoricPurity) {
  std::mt19937 rng(4);
  const TissueParams m = default_muscle();
  for (int t = 0; t < 20; ++t) {
    const Mat3 F = random_F(rng, 0.2);
    const StressPoint sp = evaluate_stress(fibre_point(F, Vec3(0.6, 0.0, 0.8)), {}, 1e3, 0.6, m);
    EXPECT_LE((sp.decomposition.sum() - sp.tau).norm(), 1e-9 * sp.tau.norm());
    EXPECT_LE(std::abs(sp.tau_iso.trace()), 1e-9 * sp.tau_iso.norm());
  }
}

TEST(Constitutive, IsochoricStressIgnoresDilation) {
  std::mt19937 rng(8);
  const TissueParams m = default_muscle();
  for (int t = 0; t < 10; ++t) {
    const Mat3 F = random_F(rng, 0.2);
    const Vec3 a0 = Vec3(1.0, 0.5, -0.2).normalized();
    const Mat3 t1 = evaluate_stress(fibre_point(F, a0), {}, 0.0, 0.4, m).tau_iso;
    const Mat3 t2 = evaluate_stress(fibre_point(1.17 * F, a0), {}, 0.0, 0.4, m).tau_iso;
    EXPECT_LE((t1 - t2).norm(), 1e-9 * t1.norm());
  }
}

TEST(Constitutive, Objectivity) {
  std::mt19937 rng(12);
  const TissueParams m = default_muscle();
  const Vec3 a0 = Vec3(0.8, 0.0, 0.6);
  const Mat3 F = random_F(rng, 0.2);
  const StressPoint ref = evaluate_stress(fibre_point(F, a0), {}, 2e3, 0.8, m);
  for (int t = 0; t < 20; ++t) {
    const Mat3 Q = random_rotation(rng);
    const StressPoint rot = evaluate_stress(fibre_point(Q * F, a0), {}, 2e3, 0.8, m);
    EXPECT_LE((rot.tau - Q * ref.tau * Q.transpose()).norm(), 1e-9 * ref.tau.norm());
  }
}

TEST(Constitutive, TangentMatchesFiniteDifferences) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const MaterialSet mats = MaterialSet::defaults();
  for (const char* region : {"muscle", "aponeurosis", "fat"}) {
    const TissueParams& par = mats.at(region);
    EvalOptions opt;
    opt.quasi_static = true;
    for (int t = 0; t < 10; ++t) {
      // Keep apo/ten stretches clear of the toe jump at 1.
      Mat3 F = random_F(rng, 0.05);
      if (par.tissue_kind == TissueKind::aponeurosis) F(0, 0) += 0.05;
      F /= std::cbrt(F.determinant());
      const Vec3 a0 = Vec3::UnitX();
      const DeformationPoint dp = fibre_point(F, a0);
      const StressPoint sp = evaluate_stress_and_tangent(dp, {}, 700.0, 0.5, par, opt);
      Mat3 g;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(i, j) = U(rng);
      // Lie derivative: d tau = c : sym(g) + g tau + tau g^T.
      const Mat3 lie = voigt::to_tensor(sp.C_tangent * voigt::strain(g));
      const Mat3 an = lie + g * sp.tau + sp.tau * g.transpose();
      const Mat3 fd = directional_fd(F, a0, g, 700.0, 0.5, par, opt);
      EXPECT_LE((an - fd).norm(), 1e-5 * fd.norm()) << region;
    }
  }
}

TEST(Constitutive, TangentSymmetry) {
  std::mt19937 rng(3);
  const TissueParams m = default_muscle();
  for (int t = 0; t < 10; ++t) {
    const StressPoint sp = evaluate_stress_and_tangent(
        fibre_point(random_F(rng, 0.1), Vec3::UnitX()), {}, 0.0, 0.3, m);
    EXPECT_LE((sp.C_tangent - sp.C_tangent.transpose()).norm(), 1e-8 * sp.C_tangent.norm());
  }
}

TEST(Constitutive, VolumetricOnlyTangentAtRest) {
  TissueParams par = default_fat_region();
  par.c_fat = 0.0;
  const DeformationPoint dp = from_deformation(Mat3::Identity());
  const StressPoint sp = evaluate_stress_and_tangent(dp, {}, 0.0, 0.0, par);
  EXPECT_LE(sp.C_tangent.norm(), 1e-12);
  const TangentPoint tp = evaluate_tangent(dp, {}, 0.0, 1.0, 0.0, par);
  EXPECT_DOUBLE_EQ(tp.d2psi_dD2, par.kappa);
  EXPECT_TRUE(tp.dtau_dp.isApprox(Mat3::Identity()));
}

TEST(Constitutive, FibreOnlyTangentIsRankOneAtRest) {
  TissueParams par = default_muscle();
  par.yeoh_ecm = par.yeoh_cell = YeohCoeffs{};
  par.yeoh_c = YeohCoeffs{};
  par.c_fat = 0.0;
  const Vec3 a0 = Vec3(0.0, 0.6, 0.8);
  const DeformationPoint dp = fibre_point(Mat3::Identity(), a0);
  EvalOptions opt;
  opt.quasi_static = true;
  const double act = 1.0;
  const StressPoint sp = evaluate_stress_and_tangent(dp, {}, 0.0, act, par, opt);
  const FibreStress fs = muscle_fibre_stress(1.0, 0.0, act, par, default_curves(), true);
  const double k = par.fibre_weight() * (fs.dtotal_dlambdabar - 2.0 * fs.total);
  const Mat3 A = a0 * a0.transpose();
  const Tangent6 P = voigt::dev_projector();
  const Mat3 devA = dev(A);
  // With tau_bar = s A at rest: c = k P:(A x A):P + (2/3) s (P - I x devA - devA x I).
  const double s = par.fibre_weight() * fs.total;
  Tangent6 expected = k * voigt::outer(devA, devA) +
                      (2.0 / 3.0) * s * P -
                      (2.0 / 3.0) * s * (voigt::outer(Mat3::Identity(), devA) +
                                         voigt::outer(devA, Mat3::Identity()));
  EXPECT_LE((sp.C_tangent - expected).norm(), 1e-9 * expected.norm());
  // Passive stiffness is zero at rest; the active part alone is rank one along a0.
  Eigen::SelfAdjointEigenSolver<Tangent6> es(voigt::outer(devA, devA));
  EXPECT_NEAR(es.eigenvalues()[4], 0.0, 1e-12);
}

TEST(Constitutive, RateDerivativeMatchesFiniteDifference) {
  const TissueParams m = default_muscle();
  const DeformationPoint dp = fibre_point(Vec3(1.05, 0.98, 0.97).asDiagonal(), Vec3::UnitX());
  RatePoint rp;
  rp.epsbar = -0.7;
  const Mat3 an = active_rate_derivative(dp, rp, 0.8, m);
  RatePoint hi = rp, lo = rp;
  hi.epsbar += 1e-6;
  lo.epsbar -= 1e-6;
  const Mat3 fd = (evaluate_stress(dp, hi, 0.0, 0.8, m).tau -
                   evaluate_stress(dp, lo, 0.0, 0.8, m).tau) / 2e-6;
  EXPECT_LE((an - fd).norm(), 1e-6 * fd.norm());
  EvalOptions qs;
  qs.quasi_static = true;
  EXPECT_EQ(active_rate_derivative(dp, rp, 0.8, m, qs), Mat3::Zero());
}
