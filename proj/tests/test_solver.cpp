#include <gtest/gtest.h>

#include <cmath>

#include "myo/assembly.hpp"
#include "myo/dynamics.hpp"
#include "myo/errors.hpp"
#include "myo/solver.hpp"

using namespace myo;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& A) { return A.sparseView(); }

// Scalar problem r(x) = f(x) with tangent f'(x); x < 0 is inadmissible.
class ScalarProblem : public NonlinearProblem {
 public:
  ScalarProblem(double (*f)(double), double (*df)(double)) : f_(f), df_(df) {}
  int size() const override { return 1; }
  const std::vector<int>& constrained() const override { return none_; }
  void evaluate(const Vector& x, Vector* r, SparseMatrix* K) const override {
    if (x[0] < 0.0) throw NonPositiveJacobian(x[0]);
    if (r) *r = Vector::Constant(1, f_(x[0]));
    if (K) {
      K->resize(1, 1);
      K->setZero();
      K->insert(0, 0) = df_(x[0]);
    }
  }

 private:
  double (*f_)(double);
  double (*df_)(double);
  std::vector<int> none_;
};

}  // namespace

TEST(Solver, IdentitySystem) {
  const Vector b = Vector::LinSpaced(5, -2.0, 3.0);
  const SparseMatrix I = dense_to_sparse(Eigen::MatrixXd::Identity(5, 5));
  EXPECT_LE((linear_solve(I, b) - b).norm(), 0.0);
}

TEST(Solver, SpringChain) {
  const double k1 = 2.0, k2 = 5.0, k3 = 0.5, F = 3.0;
  Eigen::MatrixXd K(3, 3);
  K << k1 + k2, -k2, 0.0, -k2, k2 + k3, -k3, 0.0, -k3, k3;
  const Vector u = linear_solve(dense_to_sparse(K), Vector::Unit(3, 2) * F);
  EXPECT_NEAR(u[0], F / k1, 1e-14);
  EXPECT_NEAR(u[1], F / k1 + F / k2, 1e-14);
  EXPECT_NEAR(u[2], F / k1 + F / k2 + F / k3, 1e-13);
  LinearSolveConfig it;
  it.kind = LinearSolverKind::iterative;
  const Vector v = linear_solve(dense_to_sparse(K), Vector::Unit(3, 2) * F, it);
  EXPECT_NEAR(v[2], u[2], 1e-8);
}

TEST(Solver, FloatingMeshIsSingular) {
  const Mesh m = generate_block(BlockSpec{}, {1, 1, 1}, BasisKind::Q1);
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  const SparseMatrix K = a.tangent(a.initial_state().x, AssemblyContext{});
  Vector b = Vector::Zero(K.rows());
  b[a.dofs().u(0, 0)] = 1.0;
  b[a.dofs().u(7, 1)] = -1.0;
  EXPECT_THROW(linear_solve(K, b), SingularMatrix);
}

TEST(Solver, ExactStartNeedsNoIteration) {
  ScalarProblem p([](double x) { return x * x * x + x - 2.0; },
                  [](double x) { return 3.0 * x * x + 1.0; });
  Vector x = Vector::Constant(1, 1.0);
  const SolveStats s = newton_solve(p, x, Vector(), NewtonConfig{});
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.iterations, 0);
}

TEST(Solver, QuadraticConvergenceOnScalarProblem) {
  ScalarProblem p([](double x) { return x * x * x + x - 2.0; },
                  [](double x) { return 3.0 * x * x + 1.0; });
  Vector x = Vector::Constant(1, 3.0);
  NewtonConfig cfg;
  cfg.abs_tol = 1e-14;
  cfg.rel_tol = 1e-15;
  const SolveStats s = newton_solve(p, x, Vector(), cfg);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  const auto& h = s.residual_history;
  ASSERT_GE(h.size(), 4u);
  for (std::size_t k = h.size() - 3; k + 1 < h.size(); ++k)
    if (h[k + 1] > 1e-13) EXPECT_LE(h[k + 1], 10.0 * h[k] * h[k]);
}

TEST(Solver, LineSearchBacksOffInadmissibleStep) {
  // r = sqrt(x) - 0.5 from x = 4: the full step lands at x = -2.
  ScalarProblem p([](double x) { return std::sqrt(x) - 0.5; },
                  [](double x) { return 0.5 / std::sqrt(x); });
  Vector x = Vector::Constant(1, 4.0);
  const SolveStats s = newton_solve(p, x, Vector(), NewtonConfig{});
  EXPECT_TRUE(s.converged);
  ASSERT_FALSE(s.halvings.empty());
  EXPECT_EQ(s.halvings[0], 1);
  EXPECT_NEAR(x[0], 0.25, 1e-9);
}

TEST(Solver, NonConvergenceReportsHistory) {
  ScalarProblem p([](double x) { return std::atan(x - 1.0) + 2.0; },
                  [](double x) { return 1.0 / (1.0 + (x - 1.0) * (x - 1.0)); });
  Vector x = Vector::Constant(1, 1.0);
  NewtonConfig cfg;
  cfg.max_iters = 3;
  cfg.max_halvings = 0;
  try {
    newton_solve(p, x, Vector(), cfg);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_FALSE(e.history().empty());
  }
}

TEST(Solver, PassiveStretchStepConvergesQuadratically) {
  const Mesh m = generate_block(BlockSpec{}, {1, 1, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  BoundaryProgram bc;
  bc.add("-x", 0, ScalarProgram::constant(0.0));
  bc.add("-y", 1, ScalarProgram::constant(0.0));
  bc.add("-z", 2, ScalarProgram::constant(0.0));
  bc.add("+x", 0, ScalarProgram::ramp(0.0, 1.0, 0.1 * BlockSpec{}.L));
  NewtonConfig cfg;
  cfg.abs_tol = 1e-12;
  Simulation sim(a, bc, ActivationProgram{}, cfg);
  SolveStats stats;
  const SystemState s = sim.step_quasistatic(sim.initial_state(), 1.0, &stats);
  EXPECT_TRUE(stats.converged);
  const auto& h = stats.residual_history;
  ASSERT_GE(h.size(), 4u);
  int checked = 0;
  for (std::size_t k = h.size() - 3; k + 1 < h.size(); ++k)
    if (h[k + 1] > 1e-13) {
      EXPECT_LE(h[k + 1], 1e3 * h[k] * h[k]) << "iteration " << k;
      ++checked;
    }
  EXPECT_GE(checked, 1);
  EXPECT_GT(s.x[a.dofs().u(m.selection_nodes("+x")[0], 0)], 0.0);
}

TEST(Solver, ConfigValidation) {
  NewtonConfig c;
  c.abs_tol = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  NewtonConfig d;
  d.max_iters = 0;
  EXPECT_THROW(d.validate(), ConfigError);
}
