#include "myo/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "myo/errors.hpp"

namespace myo {

Vec3 reaction_vector(const Assembler& a, const Vector& residual, const std::string& selection) {
  const DofMap& d = a.dofs();
  Vec3 f = Vec3::Zero();
  for (int n : a.mesh().selection_nodes(selection))
    for (int c = 0; c < 3; ++c) {
      const int dof = d.u(n, c);
      if (d.is_constrained(dof)) f[c] -= residual[dof];
    }
  return f;
}

double reaction_force(const Assembler& a, const Vector& residual, const std::string& selection,
                      const Vec3& direction) {
  return reaction_vector(a, residual, selection).dot(direction);
}

PointLocation locate_point(const Mesh& mesh, const Vec3& X) {
  const double tol = 1e-9;
  for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
    const NodeMatrix N = mesh.cell_nodes(c);
    const Vec3 lo = N.colwise().minCoeff().transpose();
    const Vec3 hi = N.colwise().maxCoeff().transpose();
    const double pad = 1e-9 * (hi - lo).norm();
    if ((X.array() < lo.array() - pad).any() || (X.array() > hi.array() + pad).any()) continue;
    Vec3 xi = Vec3::Zero();
    for (int it = 0; it < 30; ++it) {
      const ShapeTable s = shape_eval(mesh.kind, xi);
      const Vec3 r = N.transpose() * s.values - X;
      const Mat3 J = N.transpose() * s.grads;
      const Vec3 dxi = J.partialPivLu().solve(r);
      xi -= dxi;
      if (dxi.norm() < 1e-14) break;
    }
    if ((xi.array().abs() <= 1.0 + tol).all()) {
      PointLocation loc;
      loc.cell = c;
      loc.xi = xi.cwiseMax(-1.0).cwiseMin(1.0);
      return loc;
    }
  }
  std::ostringstream msg;
  msg << "point (" << X.transpose() << ") lies outside the mesh";
  throw ValidationError(msg.str());
}

Vec3 point_displacement(const Assembler& a, const Vector& x, const PointLocation& loc) {
  return a.displacement_at(x, loc.cell, loc.xi);
}

FieldSummary field_summary(const Assembler& a, const Vector& x, const AssemblyContext& ctx) {
  FieldSummary s;
  double pJ = 0.0, trace = 0.0, kin = 0.0;
  for (const PointSample& q : a.sample(x, ctx)) {
    const double J = q.dp.J;
    const double kappa = a.materials().at(a.mesh().region_of(q.cell)).kappa;
    s.max_abs_J_minus_1 = std::max(s.max_abs_J_minus_1, std::abs(J - 1.0));
    s.reference_volume += q.weight;
    s.current_volume += q.weight * J;
    pJ += q.weight * q.p * J;
    trace += q.weight * q.stress.tau.trace() / 3.0;  // tr(sigma)/3 * J
    kin += q.weight * J * volumetric_response(J, kappa).p;
  }
  s.mean_p = pJ / s.current_volume;
  s.mean_trace_sigma = trace / s.current_volume;
  s.mean_kinematic_p = kin / s.current_volume;
  const Vector r = a.residual(x, ctx);
  const DofMap& d = a.dofs();
  const int npd = d.n_cells() * d.n_pd();
  if (npd > 0) {
    s.max_abs_p_residual = r.segment(d.n_u(), npd).lpNorm<Eigen::Infinity>();
    s.max_abs_D_residual = r.tail(npd).lpNorm<Eigen::Infinity>();
  }
  return s;
}

ProbeSeries::ProbeSeries(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void ProbeSeries::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) throw Error("probe row width does not match columns");
  rows_.push_back(std::move(row));
}

bool ProbeSeries::has_column(const std::string& name) const {
  return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

std::vector<double> ProbeSeries::column(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw Error("no probe column '" + name + "'");
  const std::size_t j = static_cast<std::size_t>(it - columns_.begin());
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[j]);
  return out;
}

std::string ProbeSeries::to_csv() const {
  std::ostringstream out;
  for (std::size_t j = 0; j < columns_.size(); ++j) out << (j ? "," : "") << columns_[j];
  out << "\n";
  char buf[40];
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

void ProbeSeries::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_csv();
}

ForceDecomposition effective_force_decomposition(const ProbeSeries& active_run,
                                                 const ProbeSeries& passive_run,
                                                 const std::string& force_column) {
  const auto ta = active_run.column("t"), tp = passive_run.column("t");
  if (ta.size() != tp.size())
    throw GridMismatch("runs have " + std::to_string(ta.size()) + " and " +
                       std::to_string(tp.size()) + " samples");
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (std::abs(ta[i] - tp[i]) > 1e-12 * std::max(1.0, std::abs(ta[i])))
      throw GridMismatch("time grids differ at sample " + std::to_string(i));
  ForceDecomposition d;
  d.t = ta;
  d.total = active_run.column(force_column);
  d.passive = passive_run.column(force_column);
  for (std::size_t i = 0; i < ta.size(); ++i) d.active.push_back(d.total[i] - d.passive[i]);
  return d;
}

}  // namespace myo
