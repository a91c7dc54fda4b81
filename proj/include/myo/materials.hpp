// Per-tissue material parameters and the bundled parameter file.
#pragma once

#include <map>
#include <string>

#include "myo/curves.hpp"

namespace myo {

enum class TissueKind { muscle, aponeurosis, tendon, fat_region };

const char* tissue_name(TissueKind k);
TissueKind parse_tissue(const std::string& name);

struct TissueParams {
  TissueKind tissue_kind = TissueKind::muscle;
  double kappa = 9.838e6;  // Pa

  // Base material. Muscle mixes ECM, cell and fat; the other tissues use
  // yeoh_c alone.
  YeohCoeffs yeoh_c;
  YeohCoeffs yeoh_ecm{3703.0, -707.7, 123.2};
  YeohCoeffs yeoh_cell{3703.0, -707.7, 123.2};
  double c_fat = 0.13e6;  // Neo-Hookean fat coefficient, Pa

  double kappa_ecm = 1e6, kappa_cell = 1e7, kappa_fat = 1e7;
  double alpha = 0.02, beta = 0.1;

  double sigma0 = 2.0e5;      // Pa
  double sigma0_apo = 30e6;   // Pa
  double sigma0_ten = 30e6;   // Pa
  double epsbar0 = 5.0;       // 1/s
  double c_sarco = 0.0;
  bool shift_passive = false;
  double rho0 = 1060.0;  // kg/m^3

  bool has_fibres() const { return tissue_kind != TissueKind::fat_region; }
  /// Weight of the fibre energy in the homogenized mixture.
  double fibre_weight() const;
  /// Scale applied to the normalized fibre curve for apo/ten.
  double tissue_fibre_sigma0() const;
  /// dPsi/dI1 and d2Psi/dI1^2 of the (mixed) base material.
  YeohDerivs base_derivs(double I1bar) const;
  double base_energy(double I1bar) const;

  /// Throws ValidationError on broken invariants.
  void validate() const;
};

double mix_bulk_modulus(double alpha, double beta, double kappa_ecm,
                        double kappa_cell, double kappa_fat);

TissueParams default_muscle();
TissueParams default_aponeurosis();
TissueParams default_tendon();
TissueParams default_fat_region();

/// Material assignment per region name plus the fibre curves.
struct MaterialSet {
  std::map<std::string, TissueParams> regions;
  FibreCurves curves = FibreCurves::published();

  const TissueParams& at(const std::string& region) const;
  static MaterialSet defaults();
};

/// Reads an INI-style parameter file. Unknown sections or keys raise
/// ValidationError; missing keys keep their defaults.
MaterialSet load_materials(const std::string& path);
MaterialSet parse_materials(const std::string& text);

/// Path of the bundled parameter file.
std::string bundled_materials_path();

}  // namespace myo
