#include "myo/materials.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "myo/errors.hpp"

namespace myo {

const char* tissue_name(TissueKind k) {
  switch (k) {
    case TissueKind::muscle: return "muscle";
    case TissueKind::aponeurosis: return "aponeurosis";
    case TissueKind::tendon: return "tendon";
    case TissueKind::fat_region: return "fat";
  }
  return "?";
}

TissueKind parse_tissue(const std::string& name) {
  if (name == "muscle") return TissueKind::muscle;
  if (name == "aponeurosis") return TissueKind::aponeurosis;
  if (name == "tendon") return TissueKind::tendon;
  if (name == "fat" || name == "fat-region") return TissueKind::fat_region;
  throw ValidationError("unknown tissue kind '" + name + "'");
}

double mix_bulk_modulus(double alpha, double beta, double kappa_ecm,
                        double kappa_cell, double kappa_fat) {
  return (1.0 - beta) * (alpha * kappa_ecm + (1.0 - alpha) * kappa_cell) +
         beta * kappa_fat;
}

double TissueParams::fibre_weight() const {
  switch (tissue_kind) {
    case TissueKind::muscle: return 1.0 - beta;
    case TissueKind::aponeurosis:
    case TissueKind::tendon: return 1.0;
    case TissueKind::fat_region: return 0.0;
  }
  return 0.0;
}

double TissueParams::tissue_fibre_sigma0() const {
  switch (tissue_kind) {
    case TissueKind::aponeurosis: return sigma0_apo;
    case TissueKind::tendon: return sigma0_ten;
    default: return sigma0;
  }
}

YeohDerivs TissueParams::base_derivs(double I1bar) const {
  switch (tissue_kind) {
    case TissueKind::muscle: {
      const YeohDerivs e = yeoh_energy_derivs(I1bar, yeoh_ecm);
      const YeohDerivs c = yeoh_energy_derivs(I1bar, yeoh_cell);
      YeohDerivs out;
      out.dpsi_dI1 = (1.0 - beta) * (alpha * e.dpsi_dI1 + (1.0 - alpha) * c.dpsi_dI1) +
                     beta * c_fat;
      out.d2psi_dI1sq =
          (1.0 - beta) * (alpha * e.d2psi_dI1sq + (1.0 - alpha) * c.d2psi_dI1sq);
      return out;
    }
    case TissueKind::fat_region: return {c_fat, 0.0};
    default: return yeoh_energy_derivs(I1bar, yeoh_c);
  }
}

double TissueParams::base_energy(double I1bar) const {
  switch (tissue_kind) {
    case TissueKind::muscle:
      return (1.0 - beta) * (alpha * yeoh_energy(I1bar, yeoh_ecm) +
                             (1.0 - alpha) * yeoh_energy(I1bar, yeoh_cell)) +
             beta * c_fat * (I1bar - 3.0);
    case TissueKind::fat_region: return c_fat * (I1bar - 3.0);
    default: return yeoh_energy(I1bar, yeoh_c);
  }
}

void TissueParams::validate() const {
  const std::string who = tissue_name(tissue_kind);
  if (!(kappa > 0.0)) throw ValidationError(who + ": kappa must be positive");
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError(who + ": alpha outside [0,1]");
  if (beta < 0.0 || beta > 1.0) throw ValidationError(who + ": beta outside [0,1]");
  if (!(epsbar0 > 0.0)) throw ValidationError(who + ": epsbar0 must be positive");
  if (!(rho0 > 0.0)) throw ValidationError(who + ": rho0 must be positive");
  if (tissue_kind == TissueKind::muscle) {
    const double mixed = mix_bulk_modulus(alpha, beta, kappa_ecm, kappa_cell, kappa_fat);
    if (std::abs(kappa - mixed) > 1e-9 * mixed)
      throw ValidationError("muscle: kappa " + std::to_string(kappa) +
                            " differs from mixture value " + std::to_string(mixed));
  }
}

TissueParams default_muscle() {
  TissueParams t;
  t.kappa = mix_bulk_modulus(t.alpha, t.beta, t.kappa_ecm, t.kappa_cell, t.kappa_fat);
  return t;
}

TissueParams default_aponeurosis() {
  TissueParams t;
  t.tissue_kind = TissueKind::aponeurosis;
  t.kappa = 1e8;
  t.yeoh_c = YeohCoeffs{4.6896264, -3.455141, 484.92055}.scaled(1e6);
  t.alpha = 0.0;
  t.beta = 0.0;
  return t;
}

TissueParams default_tendon() {
  TissueParams t = default_aponeurosis();
  t.tissue_kind = TissueKind::tendon;
  return t;
}

TissueParams default_fat_region() {
  TissueParams t;
  t.tissue_kind = TissueKind::fat_region;
  t.kappa = 1e7;
  t.alpha = 0.0;
  t.beta = 1.0;
  return t;
}

const TissueParams& MaterialSet::at(const std::string& region) const {
  auto it = regions.find(region);
  if (it == regions.end())
    throw ValidationError("no material for region '" + region + "'");
  return it->second;
}

MaterialSet MaterialSet::defaults() {
  MaterialSet m;
  m.regions["muscle"] = default_muscle();
  m.regions["aponeurosis"] = default_aponeurosis();
  m.regions["tendon"] = default_tendon();
  m.regions["fat"] = default_fat_region();
  return m;
}

namespace {

namespace pt = boost::property_tree;

std::vector<double> numbers(const std::string& section, const std::string& key,
                            const std::string& text) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("[" + section + "] " + key + ": bad number '" + tok + "'");
    }
  }
  return out;
}

double scalar(const std::string& section, const std::string& key,
              const std::string& text) {
  auto v = numbers(section, key, text);
  if (v.size() != 1)
    throw ValidationError("[" + section + "] " + key + ": expected one number");
  return v[0];
}

bool boolean(const std::string& section, const std::string& key,
             const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("[" + section + "] " + key + ": expected true/false");
}

YeohCoeffs yeoh(const std::string& section, const std::string& key,
                const std::string& text) {
  auto v = numbers(section, key, text);
  if (v.empty() || v.size() > 3)
    throw ValidationError("[" + section + "] " + key + ": expected 1-3 coefficients");
  v.resize(3, 0.0);
  return {v[0], v[1], v[2]};
}

void read_tissue(const std::string& section, const pt::ptree& tree,
                 TissueParams& t) {
  bool kappa_given = false;
  double yeoh_scale = 1.0;
  for (const auto& [key, node] : tree) {
    const std::string v = node.get_value<std::string>();
    if (key == "kappa") { t.kappa = scalar(section, key, v); kappa_given = true; }
    else if (key == "kappa_ecm") t.kappa_ecm = scalar(section, key, v);
    else if (key == "kappa_cell") t.kappa_cell = scalar(section, key, v);
    else if (key == "kappa_fat") t.kappa_fat = scalar(section, key, v);
    else if (key == "alpha") t.alpha = scalar(section, key, v);
    else if (key == "beta") t.beta = scalar(section, key, v);
    else if (key == "yeoh") t.yeoh_c = yeoh(section, key, v);
    else if (key == "yeoh_ecm") t.yeoh_ecm = yeoh(section, key, v);
    else if (key == "yeoh_cell") t.yeoh_cell = yeoh(section, key, v);
    else if (key == "c_fat") t.c_fat = scalar(section, key, v);
    else if (key == "yeoh_unit") {
      if (v == "MPa") yeoh_scale = 1e6;
      else if (v == "kPa") yeoh_scale = 1e3;
      else if (v == "Pa") yeoh_scale = 1.0;
      else throw ValidationError("[" + section + "] yeoh_unit: unknown unit '" + v + "'");
    }
    else if (key == "sigma0") {
      const double s = scalar(section, key, v);
      if (t.tissue_kind == TissueKind::aponeurosis) t.sigma0_apo = s;
      else if (t.tissue_kind == TissueKind::tendon) t.sigma0_ten = s;
      else t.sigma0 = s;
    }
    else if (key == "epsbar0") t.epsbar0 = scalar(section, key, v);
    else if (key == "c_sarco") t.c_sarco = scalar(section, key, v);
    else if (key == "shift_passive") t.shift_passive = boolean(section, key, v);
    else if (key == "rho0") t.rho0 = scalar(section, key, v);
    else throw ValidationError("[" + section + "] unknown key '" + key + "'");
  }
  t.yeoh_c = t.yeoh_c.scaled(yeoh_scale);
  if (t.tissue_kind == TissueKind::muscle && !kappa_given)
    t.kappa = mix_bulk_modulus(t.alpha, t.beta, t.kappa_ecm, t.kappa_cell, t.kappa_fat);
  t.validate();
}

PiecewisePolynomial read_piecewise(const std::string& section, const pt::ptree& tree,
                                   FibreCurves* flags) {
  double below = 0.0;
  std::map<int, PiecewisePolynomial::Piece> pieces;
  for (const auto& [key, node] : tree) {
    const std::string v = node.get_value<std::string>();
    if (key == "below") below = scalar(section, key, v);
    else if (key.rfind("piece", 0) == 0) {
      auto nums = numbers(section, key, v);
      if (nums.size() < 2)
        throw ValidationError("[" + section + "] " + key + ": needs lo and coefficients");
      pieces[std::stoi(key.substr(5))] = {nums[0], {nums.begin() + 1, nums.end()}};
    }
    else if (flags && key == "regularize_toe") flags->regularize_toe = boolean(section, key, v);
    else if (flags && key == "toe_width") flags->toe_width = scalar(section, key, v);
    else if (flags && key == "continuous_force_velocity")
      flags->continuous_force_velocity = boolean(section, key, v);
    else throw ValidationError("[" + section + "] unknown key '" + key + "'");
  }
  std::vector<PiecewisePolynomial::Piece> list;
  for (auto& [i, p] : pieces) {
    if (!list.empty() && !(p.lo > list.back().lo))
      throw ValidationError("[" + section + "] knots must increase");
    list.push_back(std::move(p));
  }
  return PiecewisePolynomial(below, std::move(list));
}

SinusoidSum read_sinusoids(const std::string& section, const pt::ptree& tree) {
  double lo = 0.4, hi = 1.75;
  std::map<int, SinusoidSum::Term> terms;
  for (const auto& [key, node] : tree) {
    const std::string v = node.get_value<std::string>();
    if (key == "lo") lo = scalar(section, key, v);
    else if (key == "hi") hi = scalar(section, key, v);
    else if (key.rfind("term", 0) == 0) {
      auto n = numbers(section, key, v);
      if (n.size() != 3)
        throw ValidationError("[" + section + "] " + key + ": expected amp freq phase");
      terms[std::stoi(key.substr(4))] = {n[0], n[1], n[2]};
    }
    else throw ValidationError("[" + section + "] unknown key '" + key + "'");
  }
  std::vector<SinusoidSum::Term> list;
  for (auto& [i, t] : terms) list.push_back(t);
  return SinusoidSum(lo, hi, std::move(list));
}

}  // namespace

MaterialSet parse_materials(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  MaterialSet m = MaterialSet::defaults();
  for (const auto& [section, child] : tree) {
    if (section == "muscle" || section == "aponeurosis" || section == "tendon" ||
        section == "fat") {
      read_tissue(section, child, m.regions.at(section));
    } else if (section == "curve.muscle_passive") {
      m.curves.muscle_passive = read_piecewise(section, child, nullptr);
    } else if (section == "curve.force_velocity") {
      m.curves.force_velocity = read_piecewise(section, child, &m.curves);
    } else if (section == "curve.apo_ten_passive") {
      m.curves.apo_ten_passive = read_piecewise(section, child, &m.curves);
    } else if (section == "curve.active_length") {
      m.curves.active_length = read_sinusoids(section, child);
    } else {
      throw ValidationError("unknown section [" + section + "]");
    }
  }
  if (m.curves.continuous_force_velocity)
    m.curves.force_velocity = m.curves.force_velocity.made_continuous();
  return m;
}

MaterialSet load_materials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open material file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_materials(buf.str());
}

std::string bundled_materials_path() {
  return std::string(MYO_DATA_DIR) + "/materials.ini";
}

}  // namespace myo
