// Measurements on converged states: reaction forces, point displacements,
// field summaries, and probe time series.
#pragma once

#include <string>
#include <vector>

#include "myo/assembly.hpp"

namespace myo {

/// Force the body exerts on the support of `selection`: minus the residual
/// on its constrained dofs, projected on `direction`.
double reaction_force(const Assembler& a, const Vector& residual, const std::string& selection,
                      const Vec3& direction);
Vec3 reaction_vector(const Assembler& a, const Vector& residual, const std::string& selection);

struct PointLocation {
  int cell = -1;
  Vec3 xi = Vec3::Zero();
};

/// Finds the cell containing reference point X by inverting the
/// isoparametric map. Throws ValidationError if X lies outside the mesh.
PointLocation locate_point(const Mesh& mesh, const Vec3& X);

Vec3 point_displacement(const Assembler& a, const Vector& x, const PointLocation& loc);

struct FieldSummary {
  double max_abs_J_minus_1 = 0.0;
  double reference_volume = 0.0;
  double current_volume = 0.0;
  double mean_p = 0.0;               // volume-averaged pressure field
  double mean_trace_sigma = 0.0;     // volume average of tr(sigma)/3
  double mean_kinematic_p = 0.0;     // volume average of Psi'_vol(J(u))
  double max_abs_p_residual = 0.0;   // largest |R_p| entry
  double max_abs_D_residual = 0.0;   // largest |R_D| entry
};

FieldSummary field_summary(const Assembler& a, const Vector& x, const AssemblyContext& ctx);

/// Columns of doubles sharing a time axis ("t" first).
class ProbeSeries {
 public:
  ProbeSeries() = default;
  explicit ProbeSeries(std::vector<std::string> columns);

  void add_row(std::vector<double> row);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
  std::vector<double> column(const std::string& name) const;
  bool has_column(const std::string& name) const;

  /// Header line then rows, 17 significant digits.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

struct ForceDecomposition {
  std::vector<double> t, total, passive, active;
};

/// active = total - passive per time sample. Throws GridMismatch when the
/// two runs were not sampled on the same time grid.
ForceDecomposition effective_force_decomposition(const ProbeSeries& active_run,
                                                 const ProbeSeries& passive_run,
                                                 const std::string& force_column);

}  // namespace myo
