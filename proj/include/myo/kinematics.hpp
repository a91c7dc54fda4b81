// Pointwise deformation measures for the volumetric/isochoric split.
#pragma once

#include "myo/tensor.hpp"

namespace myo {

struct DeformationPoint {
  Mat3 F = Mat3::Identity();
  double J = 1.0;
  Mat3 Fbar = Mat3::Identity();
  Mat3 Cbar = Mat3::Identity();
  Mat3 Bbar = Mat3::Identity();
  double I1bar = 3.0;

  // Fibre quantities; valid once has_fibre is set by fibre_measures().
  bool has_fibre = false;
  Vec3 a0 = Vec3::UnitX();
  double I4bar = 1.0;
  double lambda = 1.0;
  double lambdabar = 1.0;
  Vec3 a_spatial = Vec3::UnitX();  // Fbar a0
};

struct RatePoint {
  Mat3 l = Mat3::Zero();
  Mat3 d = Mat3::Zero();
  double epsbar = 0.0;
};

/// F = I + grad0_u and the modified tensors. Throws NonPositiveJacobian when
/// det F <= 0.
DeformationPoint deformation_gradient(const Mat3& grad0_u);

/// Same as deformation_gradient but from F directly.
DeformationPoint from_deformation(const Mat3& F);

/// Fills the fibre stretch measures for the unit reference direction a0.
DeformationPoint fibre_measures(DeformationPoint dp, const Vec3& a0);

/// Modified fibre strain rate from the spatial velocity gradient l.
/// epsbar = (Fbar a0)ᵀ dev(d) (Fbar a0) / lambdabar.
RatePoint fibre_strain_rate(const DeformationPoint& dp, const Mat3& l);

}  // namespace myo
