// Total-Lagrangian residual and consistent tangent of the mixed
// displacement/pressure/dilation system.
//
// Global unknown vector layout: [u (3 per node) | p (per cell) | D (per cell)].
#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "myo/constitutive.hpp"
#include "myo/elements.hpp"
#include "myo/materials.hpp"
#include "myo/mesh.hpp"

namespace myo {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Mode { dynamic, quasistatic };

class DofMap {
 public:
  DofMap() = default;
  DofMap(const Mesh& mesh, BasisKind pd_kind);

  int n_nodes() const { return n_nodes_; }
  int n_cells() const { return n_cells_; }
  int n_pd() const { return n_pd_; }  // p (or D) dofs per cell
  int n_u() const { return 3 * n_nodes_; }
  int size() const { return n_u() + 2 * n_cells_ * n_pd_; }
  BasisKind pd_kind() const { return pd_kind_; }

  int u(int node, int comp) const { return 3 * node + comp; }
  int p(int cell, int k) const { return n_u() + cell * n_pd_ + k; }
  int D(int cell, int k) const { return n_u() + (n_cells_ + cell) * n_pd_ + k; }

  /// Marks dofs as constrained; the rest are free.
  void set_constrained(std::vector<int> dofs);
  const std::vector<int>& constrained() const { return constrained_; }
  const std::vector<int>& free() const { return free_; }
  bool is_constrained(int dof) const { return free_index_[dof] < 0; }
  /// Position of a dof in the free list, or -1.
  int free_index(int dof) const { return free_index_[dof]; }
  /// Position of a dof in the constrained list, or -1.
  int constrained_index(int dof) const { return constrained_index_[dof]; }

 private:
  BasisKind pd_kind_ = BasisKind::P1disc;
  int n_nodes_ = 0, n_cells_ = 0, n_pd_ = 0;
  std::vector<int> constrained_, free_, free_index_, constrained_index_;
};

struct SystemState {
  Vector x;  // [u | p | D]
  Vector v;  // lagged nodal velocity (3 per node)
  double t = 0.0;
  long step = 0;
  std::vector<double> activation;  // per cell
  double activation_state = 0.0;   // scalar activation-ODE state

  Eigen::Ref<const Vector> u(const DofMap& d) const { return x.head(d.n_u()); }
};

struct AssemblyOptions {
  int quad_order = 0;  // 0: 3 for Q2, 2 for Q1
  int threads = 1;
  Vec3 body_force = Vec3::Zero();  // reference force density, N/m^3
};

/// Everything the residual depends on besides the current unknowns.
struct AssemblyContext {
  Mode mode = Mode::quasistatic;
  double dt = 0.0;
  const Vector* u_prev = nullptr;  // required in dynamic mode
  const Vector* v_prev = nullptr;  // required in dynamic mode
  const std::vector<double>* activation = nullptr;  // per cell, null = 0
  const std::vector<double>* epsbar = nullptr;      // per quadrature point, null = 0
  /// Dynamic mode only: evaluate the fibre strain rate from the current
  /// iterate, (u - u_prev)/dt on the previous geometry, instead of `epsbar`.
  bool implicit_rate = false;
};

/// Values at one quadrature point of a converged state (post-processing).
struct PointSample {
  int cell, qp;
  Vec3 X;
  double weight;  // quadrature weight times reference Jacobian
  DeformationPoint dp;
  double p, D;
  StressPoint stress;
};

class Assembler {
 public:
  Assembler(const Mesh& mesh, const MaterialSet& materials, AssemblyOptions opt = {});

  const Mesh& mesh() const { return *mesh_; }
  const MaterialSet& materials() const { return *materials_; }
  const DofMap& dofs() const { return dofs_; }
  DofMap& dofs() { return dofs_; }
  const QuadratureRule& rule() const { return rule_; }
  int n_qp() const { return static_cast<int>(rule_.points.size()); }
  const AssemblyOptions& options() const { return opt_; }
  void set_threads(int n) { opt_.threads = n; }

  /// u = 0, p = 0, D = 1, v = 0.
  SystemState initial_state() const;

  /// Full-length residual (free and constrained dofs).
  Vector residual(const Vector& x, const AssemblyContext& ctx) const;
  /// Full tangent over all dofs.
  SparseMatrix tangent(const Vector& x, const AssemblyContext& ctx) const;
  void residual_and_tangent(const Vector& x, const AssemblyContext& ctx, Vector* r,
                            SparseMatrix* K) const;

  /// Lagged fibre strain rate per quadrature point from the nodal velocity
  /// v and the displacement u that produced it.
  std::vector<double> rate_cache(const Vector& u, const Vector& v) const;

  /// Residual weights that make the convergence norm dimensionless:
  /// 1/(sigma0 L^2) on u, 1/L^3 on p, 1/(sigma0 L^3) on D, L = volume^(1/3).
  Vector residual_scale() const;
  double reference_length() const { return ref_length_; }

  std::vector<PointSample> sample(const Vector& x, const AssemblyContext& ctx) const;

  /// Interpolated displacement at reference coordinates xi of a cell.
  Vec3 displacement_at(const Vector& x, int cell, const Vec3& xi) const;

 private:
  struct CellData {
    const TissueParams* params;
    bool fibres;
    std::vector<Vec3> a0;                 // per qp
    std::vector<ShapeGrads> grad0;        // per qp
    std::vector<double> weight;           // per qp, w * detJ
    std::vector<Vec3> X;                  // per qp
  };

  void assemble_range(int c0, int c1, const Vector& x, const AssemblyContext& ctx,
                      Vector* r, std::vector<Eigen::Triplet<double>>* trip) const;

  const Mesh* mesh_;
  const MaterialSet* materials_;
  AssemblyOptions opt_;
  DofMap dofs_;
  QuadratureRule rule_;
  std::vector<ShapeTable> u_shape_, pd_shape_;
  std::vector<CellData> cells_;
  double ref_length_ = 1.0, ref_sigma_ = 1.0;
};

// Free-function forms of the assembly operations.
Vector assemble_residual(const Assembler& a, const SystemState& state,
                         const SystemState& prev, double dt, Mode mode,
                         const std::vector<double>* epsbar = nullptr);
SparseMatrix assemble_tangent(const Assembler& a, const SystemState& state,
                              const SystemState& prev, double dt, Mode mode,
                              const std::vector<double>* epsbar = nullptr);

/// Splits a full matrix into the free-free and free-constrained blocks.
void split_free(const SparseMatrix& K, const DofMap& dofs, SparseMatrix* Kff,
                SparseMatrix* Kfc);

}  // namespace myo
