#include "myo/constitutive.hpp"

#include <algorithm>

namespace myo {

FibreStress muscle_fibre_stress(double lambdabar, double epsbar, double activation,
                                const TissueParams& params, const FibreCurves& curves,
                                bool quasi_static) {
  const CurveValue len = curves.active_length.eval(lambdabar + params.c_sarco);
  const double vel =
      quasi_static ? 1.0 : curves.force_velocity(epsbar / params.epsbar0);
  const CurveValue pas = curves.muscle_passive.eval(
      params.shift_passive ? lambdabar + params.c_sarco : lambdabar);

  FibreStress s;
  s.active = params.sigma0 * activation * len.value * vel;
  s.passive = params.sigma0 * pas.value;
  s.total = s.active + s.passive;
  s.dtotal_dlambdabar = params.sigma0 * (activation * len.slope * vel + pas.slope);
  return s;
}

FibreStress tissue_fibre_stress(double lambdabar, double epsbar, double activation,
                                const TissueParams& params, const FibreCurves& curves,
                                bool quasi_static) {
  switch (params.tissue_kind) {
    case TissueKind::muscle:
      return muscle_fibre_stress(lambdabar, epsbar, activation, params, curves,
                                 quasi_static);
    case TissueKind::aponeurosis:
    case TissueKind::tendon: {
      const CurveValue c = apo_ten_curve(lambdabar, curves);
      const double s0 = params.tissue_fibre_sigma0();
      FibreStress s;
      s.passive = s.total = s0 * c.value;
      s.dtotal_dlambdabar = s0 * c.slope;
      return s;
    }
    case TissueKind::fat_region: break;
  }
  return {};
}

namespace {

StressPoint evaluate(const DeformationPoint& dp, const RatePoint& rp, double p,
                     double activation, const TissueParams& params,
                     const EvalOptions& opt, bool with_tangent) {
  const FibreCurves& curves = opt.curves ? *opt.curves : default_curves();
  const Mat3 I = Mat3::Identity();

  const YeohDerivs base = params.base_derivs(dp.I1bar);
  const Mat3 taubar_base = 2.0 * base.dpsi_dI1 * dp.Bbar;

  Mat3 taubar_pas = Mat3::Zero(), taubar_act = Mat3::Zero();
  FibreStress fib;
  double w = 0.0;
  Mat3 aa = Mat3::Zero();
  if (opt.fibre_on && dp.has_fibre && params.has_fibres()) {
    w = params.fibre_weight();
    fib = tissue_fibre_stress(dp.lambdabar, rp.epsbar, activation, params, curves,
                              opt.quasi_static);
    aa = dp.a_spatial * dp.a_spatial.transpose();
    const double l2 = dp.lambdabar * dp.lambdabar;
    taubar_pas = (w * fib.passive / l2) * aa;
    taubar_act = (w * fib.active / l2) * aa;
  }
  const Mat3 taubar = taubar_base + taubar_pas + taubar_act;

  StressPoint sp;
  sp.p_contrib = p * dp.J;
  sp.decomposition.volumetric = sp.p_contrib * I;
  sp.decomposition.base = dev(taubar_base);
  sp.decomposition.fibre_passive = dev(taubar_pas);
  sp.decomposition.fibre_active = dev(taubar_act);
  sp.tau_iso = dev(taubar);
  sp.tau = sp.decomposition.volumetric + sp.tau_iso;

  if (with_tangent) {
    using namespace voigt;
    Tangent6 cbar = 4.0 * base.d2psi_dI1sq * outer(dp.Bbar, dp.Bbar);
    if (w != 0.0) {
      const double lb = dp.lambdabar;
      const double k = w * (fib.dtotal_dlambdabar / (lb * lb * lb) -
                            2.0 * fib.total / (lb * lb * lb * lb));
      cbar += k * outer(aa, aa);
    }
    const Tangent6 P = dev_projector();
    Tangent6 c_iso = contract(contract(P, cbar), P) +
                     (2.0 / 3.0) * taubar.trace() * P -
                     (2.0 / 3.0) * (outer(I, sp.tau_iso) + outer(sp.tau_iso, I));
    Tangent6 c_vol = sp.p_contrib * (outer(I, I) - 2.0 * sym_identity());
    sp.C_tangent = c_iso + c_vol;
  }
  return sp;
}

}  // namespace

StressPoint evaluate_stress(const DeformationPoint& dp, const RatePoint& rp, double p,
                            double activation, const TissueParams& params,
                            const EvalOptions& opt) {
  return evaluate(dp, rp, p, activation, params, opt, false);
}

StressPoint evaluate_stress_and_tangent(const DeformationPoint& dp, const RatePoint& rp,
                                        double p, double activation,
                                        const TissueParams& params,
                                        const EvalOptions& opt) {
  return evaluate(dp, rp, p, activation, params, opt, true);
}

Mat3 active_rate_derivative(const DeformationPoint& dp, const RatePoint& rp, double activation,
                            const TissueParams& params, const EvalOptions& opt) {
  if (opt.quasi_static || !opt.fibre_on || !dp.has_fibre ||
      params.tissue_kind != TissueKind::muscle || activation == 0.0)
    return Mat3::Zero();
  const FibreCurves& curves = opt.curves ? *opt.curves : default_curves();
  const double len = curves.active_length(dp.lambdabar + params.c_sarco);
  const double dvel = curves.force_velocity.eval(rp.epsbar / params.epsbar0).slope / params.epsbar0;
  const double l2 = dp.lambdabar * dp.lambdabar;
  const double k = params.fibre_weight() * params.sigma0 * activation * len * dvel / l2;
  return dev(k * (dp.a_spatial * dp.a_spatial.transpose()));
}

TangentPoint evaluate_tangent(const DeformationPoint& dp, const RatePoint& rp, double p,
                              double D, double activation, const TissueParams& params,
                              const EvalOptions& opt) {
  TangentPoint tp;
  tp.c = evaluate(dp, rp, p, activation, params, opt, true).C_tangent;
  tp.dtau_dp = dp.J * Mat3::Identity();
  const VolumetricResponse vol = volumetric_response(D, params.kappa);
  tp.dpsi_dD = vol.p;
  tp.d2psi_dD2 = vol.dp_dD;
  return tp;
}

}  // namespace myo
