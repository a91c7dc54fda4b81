// Along-fibre response curves and the isotropic base-material energies.
//
// All curves are normalized (dimensionless) and scaled by a tissue stress
// elsewhere. Default coefficients are the published fits; they can be
// replaced from a material file.
#pragma once

#include <limits>
#include <vector>

namespace myo {

struct CurveValue {
  double value = 0.0;
  double slope = 0.0;
};

/// Piecewise polynomial in Taylor form about each piece's left knot.
/// For x <= knots.front() the curve takes `below`; otherwise the piece with
/// lo <= x < hi is used (the last piece extends to +inf).
class PiecewisePolynomial {
 public:
  struct Piece {
    double lo;
    std::vector<double> coeffs;  // ascending powers of (x - lo)
  };

  PiecewisePolynomial() = default;
  PiecewisePolynomial(double below, std::vector<Piece> pieces);

  CurveValue eval(double x) const;
  double operator()(double x) const { return eval(x).value; }

  double below() const { return below_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::vector<double> knots() const;

  /// Evaluate one piece irrespective of the selection rule (used to inspect
  /// continuity from the left at a knot).
  CurveValue eval_piece(std::size_t i, double x) const;

  /// Copy in which each bounded piece gains a linear term so that its right
  /// end meets the value of the next piece. Starting values are unchanged.
  PiecewisePolynomial made_continuous() const;

 private:
  double below_ = 0.0;
  std::vector<Piece> pieces_;
};

/// Sum of sinusoids amp*sin(freq*x + phase) on [lo, hi], zero outside and
/// floored at zero inside.
class SinusoidSum {
 public:
  struct Term {
    double amp, freq, phase;
  };

  SinusoidSum() = default;
  SinusoidSum(double lo, double hi, std::vector<Term> terms);

  CurveValue eval(double x) const;
  double operator()(double x) const { return eval(x).value; }
  /// Raw sum without support clamp or floor.
  double raw(double x) const;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<Term> terms_;
};

struct FibreCurves {
  PiecewisePolynomial muscle_passive;
  SinusoidSum active_length;
  PiecewisePolynomial force_velocity;  // argument: epsbar / epsbar0
  PiecewisePolynomial apo_ten_passive;
  /// Blend the apo/ten curve linearly from 0 over [1, 1 + toe_width].
  bool regularize_toe = false;
  double toe_width = 5e-4;
  /// Close the rounding jumps of the printed force-velocity coefficients.
  bool continuous_force_velocity = false;

  static FibreCurves published();
};

const FibreCurves& default_curves();

// --- Named evaluations of the published curves -----------------------------

double passive_fibre_stress(double lambdabar,
                            const FibreCurves& c = default_curves());
double active_force_length(double lambdabar, double c_sarco,
                           const FibreCurves& c = default_curves());
double force_velocity(double epsbar, double epsbar0,
                      const FibreCurves& c = default_curves());
double apo_ten_fibre_stress(double lambdabar,
                            const FibreCurves& c = default_curves());
CurveValue apo_ten_curve(double lambdabar, const FibreCurves& c);

// --- Base material -----------------------------------------------------------

struct YeohCoeffs {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;  // Pa

  YeohCoeffs scaled(double s) const { return {c1 * s, c2 * s, c3 * s}; }
};

struct YeohDerivs {
  double dpsi_dI1 = 0.0;
  double d2psi_dI1sq = 0.0;
};

YeohDerivs yeoh_energy_derivs(double I1bar, double c1, double c2, double c3);
inline YeohDerivs yeoh_energy_derivs(double I1bar, const YeohCoeffs& c) {
  return yeoh_energy_derivs(I1bar, c.c1, c.c2, c.c3);
}
double yeoh_energy(double I1bar, const YeohCoeffs& c);

/// The published closed-form uniaxial Yeoh stress, reproduced verbatim
/// (its c3 term is linear in (I1 - 3), unlike the derivative of the energy).
double yeoh_uniaxial_oracle(double lambda, double c1, double c2, double c3);

/// Incompressible uniaxial Cauchy stress derived from the energy:
/// 2 (lambda^2 - 1/lambda) dPsi/dI1 at I1 = lambda^2 + 2/lambda.
double yeoh_uniaxial_energy_consistent(double lambda, const YeohCoeffs& c);

// --- Volumetric response ----------------------------------------------------

struct VolumetricResponse {
  double psi = 0.0;
  double p = 0.0;      // dPsi/dD
  double dp_dD = 0.0;  // d2Psi/dD2
};

/// Psi = kappa/4 (D^2 - 2 ln D - 1). Throws NonPositiveDilation for D <= 0.
VolumetricResponse volumetric_response(double D, double kappa);

}  // namespace myo
