// Pointwise stress and consistent tangent of the fibre-reinforced composite.
//
// Stresses are Kirchhoff (tau = J sigma). The isochoric part is the
// deviatoric projection of the fictitious stress
//   taubar = 2 dPsi/dI1 Bbar + w sigma_fib (abar ⊗ abar) / lambdabar^2,
// with w the fibre weight of the tissue.
#pragma once

#include "myo/curves.hpp"
#include "myo/kinematics.hpp"
#include "myo/materials.hpp"
#include "myo/tensor.hpp"

namespace myo {

struct FibreStress {
  double total = 0.0;    // Pa
  double active = 0.0;   // Pa
  double passive = 0.0;  // Pa
  double dtotal_dlambdabar = 0.0;  // Pa, at fixed epsbar
};

struct StressDecomposition {
  Mat3 volumetric = Mat3::Zero();
  Mat3 base = Mat3::Zero();
  Mat3 fibre_passive = Mat3::Zero();
  Mat3 fibre_active = Mat3::Zero();

  Mat3 sum() const { return volumetric + base + fibre_passive + fibre_active; }
};

struct StressPoint {
  Mat3 tau = Mat3::Zero();
  Mat3 tau_iso = Mat3::Zero();
  double p_contrib = 0.0;  // p J
  Tangent6 C_tangent = Tangent6::Zero();
  StressDecomposition decomposition;
};

struct TangentPoint {
  Tangent6 c = Tangent6::Zero();  // spatial, Kirchhoff-based
  Mat3 dtau_dp = Mat3::Zero();    // J I
  double dpsi_dD = 0.0;           // Psi'_vol(D)
  double d2psi_dD2 = 0.0;         // Psi''_vol(D)
};

struct EvalOptions {
  bool fibre_on = true;
  bool quasi_static = false;
  const FibreCurves* curves = nullptr;  // default_curves() when null
};

/// sigma0 (a sigma_len(lambdabar + c_sarco) sigma_vel(epsbar) + sigma_pass(lambdabar)).
/// In quasi-static mode sigma_vel is 1.
FibreStress muscle_fibre_stress(double lambdabar, double epsbar, double activation,
                                const TissueParams& params,
                                const FibreCurves& curves = default_curves(),
                                bool quasi_static = false);

/// Along-fibre stress of any tissue (apo/ten use their own curve and scale).
FibreStress tissue_fibre_stress(double lambdabar, double epsbar, double activation,
                                const TissueParams& params, const FibreCurves& curves,
                                bool quasi_static);

StressPoint evaluate_stress(const DeformationPoint& dp, const RatePoint& rp, double p,
                            double activation, const TissueParams& params,
                            const EvalOptions& opt = {});

TangentPoint evaluate_tangent(const DeformationPoint& dp, const RatePoint& rp, double p,
                              double D, double activation, const TissueParams& params,
                              const EvalOptions& opt = {});

/// d tau / d epsbar at fixed deformation: the force-velocity slope of the
/// active fibre stress. Zero in quasi-static mode and for passive tissues.
Mat3 active_rate_derivative(const DeformationPoint& dp, const RatePoint& rp, double activation,
                            const TissueParams& params, const EvalOptions& opt = {});

/// Stress with C_tangent filled in, in one pass.
StressPoint evaluate_stress_and_tangent(const DeformationPoint& dp, const RatePoint& rp,
                                        double p, double activation,
                                        const TissueParams& params,
                                        const EvalOptions& opt = {});

}  // namespace myo
