#include <gtest/gtest.h>

#include <random>

#include "myo/assembly.hpp"
#include "myo/errors.hpp"
#include "myo/probes.hpp"

using namespace myo;

namespace {

Mesh unit_cube(BasisKind kind, Divisions div = {1, 1, 1}) {
  BlockSpec s;
  s.L = s.W = s.H = 1.0;
  return generate_block(s, div, kind);
}

// Random admissible state: small displacement, p near 0, D near 1.
Vector random_state(const Assembler& a, std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const DofMap& d = a.dofs();
  Vector x = a.initial_state().x;
  const double L = a.reference_length();
  for (int i = 0; i < d.n_u(); ++i) x[i] = scale * L * U(rng);
  for (int c = 0; c < d.n_cells(); ++c)
    for (int k = 0; k < d.n_pd(); ++k) {
      x[d.p(c, k)] = 1e3 * U(rng);
      x[d.D(c, k)] += (k == 0 ? 0.02 : 0.005) * U(rng);
    }
  return x;
}

double fd_error(const Assembler& a, const Vector& x, const AssemblyContext& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vector dir(x.size());
  const DofMap& d = a.dofs();
  for (int i = 0; i < dir.size(); ++i) dir[i] = U(rng);
  dir.head(d.n_u()) *= 1e-3 * a.reference_length();
  dir.segment(d.n_u(), d.n_cells() * d.n_pd()) *= 1e3;
  dir.tail(d.n_cells() * d.n_pd()) *= 1e-2;
  const double h = 1e-6;
  const Vector rp = a.residual(x + h * dir, ctx), rm = a.residual(x - h * dir, ctx);
  const Vector fd = (rp - rm) / (2.0 * h);
  const Vector an = a.tangent(x, ctx) * dir;
  const Vector w = a.residual_scale();
  return (w.asDiagonal() * (an - fd)).norm() / (w.asDiagonal() * fd).norm();
}

}  // namespace

TEST(Assembly, RestStateResidualIsZero) {
  const Mesh m = generate_block(BlockSpec{}, {2, 1, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  const SystemState s = a.initial_state();
  AssemblyContext ctx;
  EXPECT_LE(a.residual(s.x, ctx).lpNorm<Eigen::Infinity>(), 1e-12);
  ctx.mode = Mode::dynamic;
  ctx.dt = 1e-5;
  ctx.u_prev = &s.x;
  ctx.v_prev = &s.v;
  EXPECT_LE(a.residual(s.x, ctx).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Assembly, UniformPressureOnUnitCube) {
  const Mesh m = unit_cube(BasisKind::Q1);
  MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  Vector x = a.initial_state().x;
  const double p0 = 1234.5;
  x[a.dofs().p(0, 0)] = p0;
  const Vector r = a.residual(x, AssemblyContext{});
  // Each corner gets p0 times the integral of its shape gradient: +-1/4 per axis.
  for (int n = 0; n < 8; ++n) {
    const Vec3 X = m.nodes[n];
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(r[a.dofs().u(n, i)], p0 * (X[i] > 0.5 ? 0.25 : -0.25), 1e-9);
  }
  // D-equation: Psi'(1) - p0 paired with the constant mode.
  EXPECT_NEAR(r[a.dofs().D(0, 0)], -p0, 1e-9);
}

TEST(Assembly, DilationPerturbationPairsWithConstantMode) {
  const Mesh m = unit_cube(BasisKind::Q1);
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  Vector x = a.initial_state().x;
  x[a.dofs().D(0, 0)] = 1.1;
  const Vector r = a.residual(x, AssemblyContext{});
  EXPECT_NEAR(r[a.dofs().p(0, 0)], -0.1, 1e-12);
}

TEST(Assembly, TangentMatchesFiniteDifferences) {
  std::mt19937 rng(7);
  for (BasisKind kind : {BasisKind::Q2, BasisKind::Q1}) {
    const Mesh m = generate_block(BlockSpec{}, {2, 1, 1}, kind, Vec3(0.8, 0.0, 0.6));
    // The printed force-velocity coefficients jump slightly at zero rate.
    MaterialSet mats = MaterialSet::defaults();
    mats.curves.force_velocity = mats.curves.force_velocity.made_continuous();
    Assembler a(m, mats);
    std::vector<double> act(m.n_cells(), 0.7);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = random_state(a, rng, 0.03);
      AssemblyContext qs;
      qs.activation = &act;
      EXPECT_LE(fd_error(a, x, qs, rng), 1e-5);

      const Vector up = random_state(a, rng, 0.03);
      const Vector v = Vector::Random(a.dofs().n_u()) * 0.01;
      const std::vector<double> rates = a.rate_cache(up.head(a.dofs().n_u()), v);
      AssemblyContext dyn;
      dyn.mode = Mode::dynamic;
      dyn.dt = 1e-3;
      dyn.u_prev = &up;
      dyn.v_prev = &v;
      dyn.activation = &act;
      dyn.epsbar = &rates;
      EXPECT_LE(fd_error(a, x, dyn, rng), 1e-5);

      dyn.epsbar = nullptr;
      dyn.implicit_rate = true;
      const Vector xi = up + 1e-4 * (x - a.initial_state().x);  // modest rates
      EXPECT_LE(fd_error(a, xi, dyn, rng), 1e-5);
    }
  }
}

TEST(Assembly, TangentIsSymmetricWithoutImplicitRate) {
  std::mt19937 rng(3);
  const Mesh m = generate_block(BlockSpec{}, {2, 1, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  std::vector<double> act(m.n_cells(), 0.5);
  AssemblyContext ctx;
  ctx.activation = &act;
  const SparseMatrix K = a.tangent(random_state(a, rng, 0.03), ctx);
  // Compare in the scaled norm: the blocks carry different units.
  const Vector w = a.residual_scale().cwiseSqrt();
  const SparseMatrix Ks = w.asDiagonal() * K * w.asDiagonal();
  const SparseMatrix Kt = Ks.transpose();
  EXPECT_LE((Ks - Kt).norm() / Ks.norm(), 1e-10);
}

TEST(Assembly, ConsistentMassRowSums) {
  const Mesh m = generate_block(BlockSpec{}, {2, 1, 1});
  MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  const SystemState s = a.initial_state();
  const double dt = 1e-3;
  AssemblyContext dyn;
  dyn.mode = Mode::dynamic;
  dyn.dt = dt;
  dyn.u_prev = &s.x;
  dyn.v_prev = &s.v;
  const SparseMatrix Kd = a.tangent(s.x, dyn), Ks = a.tangent(s.x, AssemblyContext{});
  const SparseMatrix Mdt = Kd - Ks;
  const Vector ones_x = [&] {
    Vector e = Vector::Zero(a.dofs().size());
    for (int n = 0; n < a.dofs().n_nodes(); ++n) e[a.dofs().u(n, 0)] = 1.0;
    return e;
  }();
  const Vector row = Mdt * ones_x;
  double sum = 0.0;
  for (int n = 0; n < a.dofs().n_nodes(); ++n) sum += row[a.dofs().u(n, 0)];
  const double expected = mats.at("muscle").rho0 * m.volume() / (dt * dt);
  EXPECT_NEAR(sum / expected, 1.0, 1e-12);
}

TEST(Assembly, RigidTranslationLeavesResidualUnchanged) {
  std::mt19937 rng(11);
  const Mesh m = generate_block(BlockSpec{}, {2, 2, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  std::vector<double> act(m.n_cells(), 1.0);
  AssemblyContext ctx;
  ctx.activation = &act;
  const Vector x = random_state(a, rng, 0.02);
  const Vector r0 = a.residual(x, ctx);
  Vector y = x;
  const Vec3 shift(0.013, -0.004, 0.007);
  for (int n = 0; n < a.dofs().n_nodes(); ++n)
    for (int i = 0; i < 3; ++i) y[a.dofs().u(n, i)] += shift[i];
  EXPECT_LE((a.residual(y, ctx) - r0).norm(), 1e-9 * r0.norm());
}

TEST(Assembly, InternalForcesBalance) {
  std::mt19937 rng(5);
  const Mesh m = generate_block(BlockSpec{}, {2, 1, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  const Vector x = random_state(a, rng, 0.02);
  const Vector r = a.residual(x, AssemblyContext{});
  Vec3 total = Vec3::Zero(), scale = Vec3::Zero();
  for (int n = 0; n < a.dofs().n_nodes(); ++n)
    for (int i = 0; i < 3; ++i) {
      total[i] += r[a.dofs().u(n, i)];
      scale[i] += std::abs(r[a.dofs().u(n, i)]);
    }
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(total[i]), 1e-9 * scale[i]);
}

TEST(Assembly, BodyForceEntersExternalTerm) {
  const Mesh m = unit_cube(BasisKind::Q2);
  const MaterialSet mats = MaterialSet::defaults();
  AssemblyOptions opt;
  opt.body_force = Vec3(0.0, 0.0, -9.81 * 1060.0);
  Assembler a(m, mats, opt);
  const Vector r = a.residual(a.initial_state().x, AssemblyContext{});
  double fz = 0.0;
  for (int n = 0; n < a.dofs().n_nodes(); ++n) fz += r[a.dofs().u(n, 2)];
  EXPECT_NEAR(fz, 9.81 * 1060.0, 1e-8);
}

TEST(Assembly, InvertedIterateReportsCell) {
  const Mesh m = generate_block(BlockSpec{}, {2, 1, 1}, BasisKind::Q1);
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  Vector x = a.initial_state().x;
  for (int n : m.selection_nodes("+x")) x[a.dofs().u(n, 0)] = -2.0 * BlockSpec{}.L;
  try {
    a.residual(x, AssemblyContext{});
    FAIL() << "expected NonPositiveJacobian";
  } catch (const NonPositiveJacobian& e) {
    EXPECT_EQ(e.cell(), 1);
  }
}

TEST(Assembly, ThreadedAssemblyMatchesSerial) {
  std::mt19937 rng(9);
  const Mesh m = generate_block(BlockSpec{}, {4, 2, 1});
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a1(m, mats);
  AssemblyOptions o;
  o.threads = 4;
  Assembler a4(m, mats, o);
  const Vector x = random_state(a1, rng, 0.02);
  const Vector r1 = a1.residual(x, AssemblyContext{}), r4 = a4.residual(x, AssemblyContext{});
  EXPECT_LE((r1 - r4).norm(), 1e-12 * r1.norm());
  const SparseMatrix K1 = a1.tangent(x, AssemblyContext{}), K4 = a4.tangent(x, AssemblyContext{});
  EXPECT_LE((K1 - K4).norm(), 1e-12 * K1.norm());
}

TEST(Assembly, SplitFreePartitionsTheMatrix) {
  const Mesh m = unit_cube(BasisKind::Q1);
  const MaterialSet mats = MaterialSet::defaults();
  Assembler a(m, mats);
  std::vector<int> fixed;
  for (int n : m.selection_nodes("-x"))
    for (int i = 0; i < 3; ++i) fixed.push_back(a.dofs().u(n, i));
  a.dofs().set_constrained(fixed);
  const SparseMatrix K = a.tangent(a.initial_state().x, AssemblyContext{});
  SparseMatrix Kff, Kfc;
  split_free(K, a.dofs(), &Kff, &Kfc);
  EXPECT_EQ(Kff.rows(), static_cast<long>(a.dofs().free().size()));
  EXPECT_EQ(Kfc.cols(), static_cast<long>(fixed.size()));
  const int f0 = a.dofs().free()[0];
  EXPECT_DOUBLE_EQ(Kff.coeff(0, 0), K.coeff(f0, f0));
}
