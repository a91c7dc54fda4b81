#include "myo/kinematics.hpp"

#include <cassert>
#include <cmath>

#include "myo/errors.hpp"

namespace myo {

DeformationPoint from_deformation(const Mat3& F) {
  DeformationPoint dp;
  dp.F = F;
  dp.J = F.determinant();
  if (!(dp.J > 0.0)) throw NonPositiveJacobian(dp.J);
  const double scale = std::cbrt(1.0 / dp.J);
  dp.Fbar = scale * F;
  dp.Cbar = dp.Fbar.transpose() * dp.Fbar;
  dp.Bbar = dp.Fbar * dp.Fbar.transpose();
  dp.I1bar = dp.Cbar.trace();
  return dp;
}

DeformationPoint deformation_gradient(const Mat3& grad0_u) {
  return from_deformation(Mat3::Identity() + grad0_u);
}

DeformationPoint fibre_measures(DeformationPoint dp, const Vec3& a0) {
  assert(std::abs(a0.norm() - 1.0) <= 1e-10);
  dp.has_fibre = true;
  dp.a0 = a0;
  dp.lambda = (dp.F * a0).norm();
  dp.a_spatial = dp.Fbar * a0;
  dp.lambdabar = dp.a_spatial.norm();
  dp.I4bar = a0.dot(dp.Cbar * a0);
  return dp;
}

RatePoint fibre_strain_rate(const DeformationPoint& dp, const Mat3& l) {
  RatePoint rp;
  rp.l = l;
  rp.d = 0.5 * (l + l.transpose());
  if (dp.has_fibre && dp.lambdabar > 0.0) {
    const Vec3& a = dp.a_spatial;
    rp.epsbar = a.dot(dev(rp.d) * a) / dp.lambdabar;
  }
  return rp;
}

}  // namespace myo
