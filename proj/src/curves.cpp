#include "myo/curves.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "myo/errors.hpp"

namespace myo {

PiecewisePolynomial::PiecewisePolynomial(double below, std::vector<Piece> pieces)
    : below_(below), pieces_(std::move(pieces)) {}

std::vector<double> PiecewisePolynomial::knots() const {
  std::vector<double> k;
  for (const auto& p : pieces_) k.push_back(p.lo);
  return k;
}

CurveValue PiecewisePolynomial::eval_piece(std::size_t i, double x) const {
  const auto& piece = pieces_[i];
  const double dx = x - piece.lo;
  CurveValue out;
  // Horner for value and derivative.
  for (std::size_t k = piece.coeffs.size(); k-- > 0;) {
    out.slope = out.slope * dx + out.value;
    out.value = out.value * dx + piece.coeffs[k];
  }
  return out;
}

PiecewisePolynomial PiecewisePolynomial::made_continuous() const {
  PiecewisePolynomial out = *this;
  for (std::size_t i = 0; i + 1 < out.pieces_.size(); ++i) {
    auto& piece = out.pieces_[i];
    const double hi = out.pieces_[i + 1].lo;
    const double jump = out.pieces_[i + 1].coeffs.at(0) - eval_piece(i, hi).value;
    if (piece.coeffs.size() < 2) piece.coeffs.resize(2, 0.0);
    piece.coeffs[1] += jump / (hi - piece.lo);
  }
  return out;
}

CurveValue PiecewisePolynomial::eval(double x) const {
  if (pieces_.empty() || x <= pieces_.front().lo) return {below_, 0.0};
  std::size_t i = 0;
  while (i + 1 < pieces_.size() && x >= pieces_[i + 1].lo) ++i;
  return eval_piece(i, x);
}

SinusoidSum::SinusoidSum(double lo, double hi, std::vector<Term> terms)
    : lo_(lo), hi_(hi), terms_(std::move(terms)) {}

double SinusoidSum::raw(double x) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.amp * std::sin(t.freq * x + t.phase);
  return s;
}

CurveValue SinusoidSum::eval(double x) const {
  if (x < lo_ || x > hi_) return {};
  CurveValue out;
  for (const auto& t : terms_) {
    out.value += t.amp * std::sin(t.freq * x + t.phase);
    out.slope += t.amp * t.freq * std::cos(t.freq * x + t.phase);
  }
  if (out.value <= 0.0) return {};
  return out;
}

FibreCurves FibreCurves::published() {
  FibreCurves c;
  c.muscle_passive = PiecewisePolynomial(
      0.0, {{1.0, {0.0, 0.0, 2.353}},
            {1.25, {0.147, 1.18, 3.44}},
            {1.5, {0.656, 2.90, 0.427}},
            {1.65, {1.1, 3.023}}});
  c.active_length = SinusoidSum(0.4, 1.75,
                                {{0.642, 1.29, 0.629},
                                 {0.325, 5.31, -4.52},
                                 {0.328, 6.74, 1.69},
                                 {0.015, 19.8, -7.39},
                                 {0.139, 8.04, 2.54},
                                 {0.0018, 32.2, -6.45},
                                 {0.012, 23.2, -2.64}});
  c.force_velocity = PiecewisePolynomial(
      0.0, {{-1.2, {0.0, 0.0, 0.1431, 0.2579}},
            {-0.25, {0.3503, 0.9703, -0.9435, 29.8255}},
            {0.0, {1.0, 6.0908, 186.1961, -3165.6847}},
            {0.05, {1.3743, 0.9678, -1.4139, 0.6882}},
            {0.75, {1.5950}}});
  // The middle linear coefficient is 10.327640: value and slope continuity
  // with both neighbouring pieces pin it.
  c.apo_ten_passive = PiecewisePolynomial(
      0.0, {{1.0, {0.01, 0.01, 515.882034}},
            {1.01, {0.06168820, 10.327640, 600.590242}},
            {1.02, {0.2250236, 22.3394455, -9.975321}},
            {1.15, {2.960568, 19.7458618}}});
  return c;
}

const FibreCurves& default_curves() {
  static const FibreCurves curves = FibreCurves::published();
  return curves;
}

double passive_fibre_stress(double lambdabar, const FibreCurves& c) {
  return c.muscle_passive(lambdabar);
}

double active_force_length(double lambdabar, double c_sarco,
                           const FibreCurves& c) {
  return c.active_length(lambdabar + c_sarco);
}

double force_velocity(double epsbar, double epsbar0, const FibreCurves& c) {
  return c.force_velocity(epsbar / epsbar0);
}

CurveValue apo_ten_curve(double lambdabar, const FibreCurves& c) {
  CurveValue v = c.apo_ten_passive.eval(lambdabar);
  if (c.regularize_toe && lambdabar > 1.0 && lambdabar < 1.0 + c.toe_width) {
    const double w = (lambdabar - 1.0) / c.toe_width;
    v.slope = v.value / c.toe_width + w * v.slope;
    v.value *= w;
  }
  return v;
}

double apo_ten_fibre_stress(double lambdabar, const FibreCurves& c) {
  return apo_ten_curve(lambdabar, c).value;
}

YeohDerivs yeoh_energy_derivs(double I1bar, double c1, double c2, double c3) {
  const double x = I1bar - 3.0;
  return {c1 + 2.0 * c2 * x + 3.0 * c3 * x * x, 2.0 * c2 + 6.0 * c3 * x};
}

double yeoh_energy(double I1bar, const YeohCoeffs& c) {
  const double x = I1bar - 3.0;
  return x * (c.c1 + x * (c.c2 + x * c.c3));
}

double yeoh_uniaxial_oracle(double lambda, double c1, double c2, double c3) {
  const double I = lambda * lambda + 2.0 / lambda - 3.0;
  return 2.0 * (lambda * lambda - 1.0 / lambda) *
         (c1 + 2.0 * c2 * I + 3.0 * c3 * I);
}

double yeoh_uniaxial_energy_consistent(double lambda, const YeohCoeffs& c) {
  const double I1 = lambda * lambda + 2.0 / lambda;
  return 2.0 * (lambda * lambda - 1.0 / lambda) *
         yeoh_energy_derivs(I1, c).dpsi_dI1;
}

VolumetricResponse volumetric_response(double D, double kappa) {
  if (!(D > 0.0)) throw NonPositiveDilation(D);
  VolumetricResponse r;
  r.psi = 0.25 * kappa * (D * D - 2.0 * std::log(D) - 1.0);
  r.p = 0.5 * kappa * (D - 1.0 / D);
  r.dp_dD = 0.5 * kappa * (1.0 + 1.0 / (D * D));
  return r;
}

}  // namespace myo
