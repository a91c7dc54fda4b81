#include "myo/assembly.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "myo/errors.hpp"

namespace myo {

DofMap::DofMap(const Mesh& mesh, BasisKind pd_kind)
    : pd_kind_(pd_kind),
      n_nodes_(static_cast<int>(mesh.n_nodes())),
      n_cells_(static_cast<int>(mesh.n_cells())),
      n_pd_(n_dofs(pd_kind)) {
  set_constrained({});
}

void DofMap::set_constrained(std::vector<int> dofs) {
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  constrained_ = std::move(dofs);
  free_index_.assign(size(), 0);
  constrained_index_.assign(size(), -1);
  for (std::size_t i = 0; i < constrained_.size(); ++i) {
    free_index_[constrained_[i]] = -1;
    constrained_index_[constrained_[i]] = static_cast<int>(i);
  }
  free_.clear();
  for (int d = 0; d < size(); ++d)
    if (free_index_[d] == 0 && constrained_index_[d] < 0) {
      free_index_[d] = static_cast<int>(free_.size());
      free_.push_back(d);
    }
}

Assembler::Assembler(const Mesh& mesh, const MaterialSet& materials, AssemblyOptions opt)
    : mesh_(&mesh), materials_(&materials), opt_(opt) {
  const BasisKind pd = mesh.kind == BasisKind::Q2 ? BasisKind::P1disc : BasisKind::P0disc;
  dofs_ = DofMap(mesh, pd);
  if (opt_.quad_order == 0) opt_.quad_order = mesh.kind == BasisKind::Q2 ? 3 : 2;
  rule_ = gauss_rule(opt_.quad_order);
  u_shape_ = shape_eval(mesh.kind, rule_.points);
  pd_shape_ = shape_eval(pd, rule_.points);

  cells_.resize(mesh.n_cells());
  for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
    CellData& cd = cells_[c];
    const std::string& region = mesh.region_of(c);
    cd.params = &materials.at(region);
    cd.fibres = cd.params->has_fibres() && mesh.fibres.has(c, region);
    const NodeMatrix X = mesh.cell_nodes(c);
    for (int g = 0; g < n_qp(); ++g) {
      const MappedPoint mp = isoparametric_map(X, u_shape_[g], c);
      cd.grad0.push_back(mp.grad0);
      cd.weight.push_back(rule_.weights[g] * mp.detJ_ref);
      cd.X.push_back(mp.x0);
      cd.a0.push_back(cd.fibres ? mesh.fibres.at(c, region, g, opt_.quad_order)
                                : Vec3::UnitX());
    }
  }
  ref_length_ = std::cbrt(mesh.volume(opt_.quad_order));
  auto it = materials.regions.find("muscle");
  ref_sigma_ = it != materials.regions.end() ? it->second.sigma0 : 2.0e5;
}

SystemState Assembler::initial_state() const {
  SystemState s;
  s.x = Vector::Zero(dofs_.size());
  for (int c = 0; c < dofs_.n_cells(); ++c) s.x[dofs_.D(c, 0)] = 1.0;
  s.v = Vector::Zero(dofs_.n_u());
  s.activation.assign(dofs_.n_cells(), 0.0);
  return s;
}

Vector Assembler::residual_scale() const {
  Vector s(dofs_.size());
  const double L = ref_length_;
  s.head(dofs_.n_u()).setConstant(1.0 / (ref_sigma_ * L * L));
  const int npd = dofs_.n_cells() * dofs_.n_pd();
  s.segment(dofs_.n_u(), npd).setConstant(1.0 / (L * L * L));
  s.tail(npd).setConstant(1.0 / (ref_sigma_ * L * L * L));
  return s;
}

namespace {

// Engineering-strain operator of sym(e_c ⊗ g) for c = 0..2.
Eigen::Matrix<double, 6, 3> strain_operator(const Vec3& g) {
  Eigen::Matrix<double, 6, 3> B = Eigen::Matrix<double, 6, 3>::Zero();
  B(0, 0) = g[0];
  B(1, 1) = g[1];
  B(2, 2) = g[2];
  B(3, 1) = g[2]; B(3, 2) = g[1];  // 23
  B(4, 0) = g[2]; B(4, 2) = g[0];  // 13
  B(5, 0) = g[1]; B(5, 1) = g[0];  // 12
  return B;
}

}  // namespace

void Assembler::assemble_range(int c0, int c1, const Vector& x, const AssemblyContext& ctx,
                               Vector* r, std::vector<Eigen::Triplet<double>>* trip) const {
  const Mesh& mesh = *mesh_;
  const int nu = n_dofs(mesh.kind);
  const int npd = dofs_.n_pd();
  const int ne = 3 * nu + 2 * npd;
  const bool dynamic = ctx.mode == Mode::dynamic;
  const bool want_K = trip != nullptr;
  const FibreCurves* curves = &materials_->curves;
  const double dt2 = dynamic ? ctx.dt * ctx.dt : 1.0;

  const bool implicit_rate = dynamic && ctx.implicit_rate;
  Eigen::Matrix<double, Eigen::Dynamic, 3> ue(nu, 3), ae(nu, 3), upe(nu, 3);
  Eigen::VectorXd pe(npd), De(npd), Re(ne);
  Eigen::MatrixXd Ke(ne, ne);
  std::vector<int> gd(ne);
  std::vector<Eigen::Matrix<double, 6, 3>> B(nu), CB(nu);

  for (int c = c0; c < c1; ++c) {
    const CellData& cd = cells_[c];
    const TissueParams& par = *cd.params;
    const auto& conn = mesh.cells[c];
    for (int a = 0; a < nu; ++a)
      for (int i = 0; i < 3; ++i) {
        gd[3 * a + i] = dofs_.u(conn[a], i);
        ue(a, i) = x[gd[3 * a + i]];
        if (dynamic) {
          upe(a, i) = (*ctx.u_prev)[gd[3 * a + i]];
          ae(a, i) = ue(a, i) - upe(a, i) - ctx.dt * (*ctx.v_prev)[gd[3 * a + i]];
        }
      }
    for (int k = 0; k < npd; ++k) {
      gd[3 * nu + k] = dofs_.p(c, k);
      gd[3 * nu + npd + k] = dofs_.D(c, k);
      pe[k] = x[dofs_.p(c, k)];
      De[k] = x[dofs_.D(c, k)];
    }
    const double act = ctx.activation ? (*ctx.activation)[c] : 0.0;
    EvalOptions eo;
    eo.quasi_static = !dynamic;
    eo.curves = curves;

    Re.setZero();
    if (want_K) Ke.setZero();
    for (int g = 0; g < n_qp(); ++g) {
      const ShapeGrads& G0 = cd.grad0[g];
      const double w = cd.weight[g];
      const ShapeValues& N = u_shape_[g].values;
      const ShapeValues& M = pd_shape_[g].values;

      DeformationPoint dp;
      try {
        dp = deformation_gradient(ue.transpose() * G0);
      } catch (const NonPositiveJacobian& e) {
        throw NonPositiveJacobian(e.jacobian(), c);
      }
      if (cd.fibres) dp = fibre_measures(dp, cd.a0[g]);
      RatePoint rp;
      Mat3 rate_map = Mat3::Zero();  // epsbar = rate_map : grad0(u - u_prev)
      if (implicit_rate && cd.fibres) {
        const Mat3 Fp = Mat3::Identity() + upe.transpose() * G0;
        const DeformationPoint dpp = fibre_measures(from_deformation(Fp), cd.a0[g]);
        const Mat3 P = dev(Mat3(dpp.a_spatial * dpp.a_spatial.transpose()));
        rate_map = P * Fp.inverse().transpose() / (ctx.dt * dpp.lambdabar);
        rp.epsbar = rate_map.cwiseProduct((ue - upe).transpose() * G0).sum();
      } else if (ctx.epsbar) {
        rp.epsbar = (*ctx.epsbar)[static_cast<std::size_t>(c) * n_qp() + g];
      }
      const double ph = M.dot(pe), Dh = M.dot(De);
      const StressPoint sp = want_K ? evaluate_stress_and_tangent(dp, rp, ph, act, par, eo)
                                    : evaluate_stress(dp, rp, ph, act, par, eo);
      const VolumetricResponse vol = volumetric_response(Dh, par.kappa);
      const ShapeGrads Gx = G0 * dp.F.inverse();

      Vec3 acc = Vec3::Zero();
      if (dynamic) acc = ae.transpose() * N;
      for (int a = 0; a < nu; ++a) {
        Vec3 f = sp.tau * Gx.row(a).transpose();
        if (dynamic) f += (par.rho0 * N[a] / dt2) * acc;
        f -= N[a] * opt_.body_force;
        Re.segment<3>(3 * a) += w * f;
      }
      Re.segment(3 * nu, npd) += (w * (dp.J - Dh)) * M;
      Re.segment(3 * nu + npd, npd) += (w * (vol.p - ph)) * M;

      if (!want_K) continue;
      for (int a = 0; a < nu; ++a) {
        B[a] = strain_operator(Gx.row(a).transpose());
        CB[a] = sp.C_tangent * B[a];
      }
      if (implicit_rate && cd.fibres) {
        const Mat3 dtau = active_rate_derivative(dp, rp, act, par, eo);
        if (dtau != Mat3::Zero()) {
          const Eigen::MatrixXd left = Gx * dtau;        // rows: (dtau g_a)^T
          const Eigen::MatrixXd right = G0 * rate_map.transpose();  // rows: (rate_map G0_b)^T
          for (int a = 0; a < nu; ++a)
            for (int b = 0; b < nu; ++b)
              Ke.block<3, 3>(3 * a, 3 * b) +=
                  w * left.row(a).transpose() * right.row(b);
        }
      }
      const Eigen::MatrixXd tauGx = Gx * sp.tau;  // rows: g_a^T tau
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < nu; ++b) {
          Mat3 kab = B[a].transpose() * CB[b];
          double geo = tauGx.row(a).dot(Gx.row(b));
          if (dynamic) geo += par.rho0 * N[a] * N[b] / dt2;
          kab.diagonal().array() += geo;
          Ke.block<3, 3>(3 * a, 3 * b) += w * kab;
        }
        for (int k = 0; k < npd; ++k)
          for (int i = 0; i < 3; ++i) {
            const double v = w * dp.J * M[k] * Gx(a, i);
            Ke(3 * a + i, 3 * nu + k) += v;
            Ke(3 * nu + k, 3 * a + i) += v;
          }
      }
      const Eigen::MatrixXd MM = w * M * M.transpose();
      Ke.block(3 * nu, 3 * nu + npd, npd, npd) -= MM;
      Ke.block(3 * nu + npd, 3 * nu, npd, npd) -= MM;
      Ke.block(3 * nu + npd, 3 * nu + npd, npd, npd) += vol.dp_dD * MM;
    }

    if (r)
      for (int i = 0; i < ne; ++i) (*r)[gd[i]] += Re[i];
    if (want_K)
      for (int j = 0; j < ne; ++j)
        for (int i = 0; i < ne; ++i) {
          const bool pp = i >= 3 * nu && i < 3 * nu + npd && j >= 3 * nu && j < 3 * nu + npd;
          if (!pp) trip->emplace_back(gd[i], gd[j], Ke(i, j));
        }
  }
}

void Assembler::residual_and_tangent(const Vector& x, const AssemblyContext& ctx, Vector* r,
                                     SparseMatrix* K) const {
  if (ctx.mode == Mode::dynamic && (!ctx.u_prev || !ctx.v_prev || !(ctx.dt > 0.0)))
    throw Error("dynamic assembly needs dt > 0 and the previous state");
  const int n = dofs_.size();
  const int nc = dofs_.n_cells();
  const int nt = std::max(1, std::min(opt_.threads, nc));
  std::vector<Vector> rs(nt, Vector::Zero(r ? n : 0));
  std::vector<std::vector<Eigen::Triplet<double>>> ts(nt);
  std::vector<std::exception_ptr> errors(nt);
  auto work = [&](int t) {
    const int c0 = static_cast<int>(static_cast<long>(nc) * t / nt);
    const int c1 = static_cast<int>(static_cast<long>(nc) * (t + 1) / nt);
    try {
      assemble_range(c0, c1, x, ctx, r ? &rs[t] : nullptr, K ? &ts[t] : nullptr);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (r) {
    *r = std::move(rs[0]);
    for (int t = 1; t < nt; ++t) *r += rs[t];
  }
  if (K) {
    std::size_t total = 0;
    for (auto& t : ts) total += t.size();
    std::vector<Eigen::Triplet<double>> all;
    all.reserve(total);
    for (auto& t : ts) all.insert(all.end(), t.begin(), t.end());
    K->resize(n, n);
    K->setFromTriplets(all.begin(), all.end());
  }
}

Vector Assembler::residual(const Vector& x, const AssemblyContext& ctx) const {
  Vector r;
  residual_and_tangent(x, ctx, &r, nullptr);
  return r;
}

SparseMatrix Assembler::tangent(const Vector& x, const AssemblyContext& ctx) const {
  SparseMatrix K;
  residual_and_tangent(x, ctx, nullptr, &K);
  return K;
}

std::vector<double> Assembler::rate_cache(const Vector& u, const Vector& v) const {
  const Mesh& mesh = *mesh_;
  const int nu = n_dofs(mesh.kind);
  std::vector<double> out(static_cast<std::size_t>(mesh.n_cells()) * n_qp(), 0.0);
  Eigen::Matrix<double, Eigen::Dynamic, 3> ue(nu, 3), ve(nu, 3);
  for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
    const CellData& cd = cells_[c];
    if (!cd.fibres) continue;
    for (int a = 0; a < nu; ++a)
      for (int i = 0; i < 3; ++i) {
        ue(a, i) = u[dofs_.u(mesh.cells[c][a], i)];
        ve(a, i) = v[dofs_.u(mesh.cells[c][a], i)];
      }
    for (int g = 0; g < n_qp(); ++g) {
      DeformationPoint dp = deformation_gradient(ue.transpose() * cd.grad0[g]);
      dp = fibre_measures(dp, cd.a0[g]);
      const Mat3 l = (ve.transpose() * cd.grad0[g]) * dp.F.inverse();
      out[static_cast<std::size_t>(c) * n_qp() + g] = fibre_strain_rate(dp, l).epsbar;
    }
  }
  return out;
}

std::vector<PointSample> Assembler::sample(const Vector& x, const AssemblyContext& ctx) const {
  const Mesh& mesh = *mesh_;
  const int nu = n_dofs(mesh.kind);
  const int npd = dofs_.n_pd();
  std::vector<PointSample> out;
  Eigen::Matrix<double, Eigen::Dynamic, 3> ue(nu, 3);
  EvalOptions eo;
  eo.quasi_static = ctx.mode == Mode::quasistatic;
  eo.curves = &materials_->curves;
  for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
    const CellData& cd = cells_[c];
    for (int a = 0; a < nu; ++a)
      for (int i = 0; i < 3; ++i) ue(a, i) = x[dofs_.u(mesh.cells[c][a], i)];
    for (int g = 0; g < n_qp(); ++g) {
      PointSample s;
      s.cell = c;
      s.qp = g;
      s.X = cd.X[g];
      s.weight = cd.weight[g];
      s.dp = deformation_gradient(ue.transpose() * cd.grad0[g]);
      if (cd.fibres) s.dp = fibre_measures(s.dp, cd.a0[g]);
      const ShapeValues& M = pd_shape_[g].values;
      s.p = s.D = 0.0;
      for (int k = 0; k < npd; ++k) {
        s.p += M[k] * x[dofs_.p(c, k)];
        s.D += M[k] * x[dofs_.D(c, k)];
      }
      RatePoint rp;
      if (ctx.epsbar) rp.epsbar = (*ctx.epsbar)[static_cast<std::size_t>(c) * n_qp() + g];
      const double act = ctx.activation ? (*ctx.activation)[c] : 0.0;
      s.stress = evaluate_stress(s.dp, rp, s.p, act, *cd.params, eo);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Vec3 Assembler::displacement_at(const Vector& x, int cell, const Vec3& xi) const {
  const ShapeTable s = shape_eval(mesh_->kind, xi);
  Vec3 u = Vec3::Zero();
  const auto& conn = mesh_->cells[cell];
  for (std::size_t a = 0; a < conn.size(); ++a)
    for (int i = 0; i < 3; ++i) u[i] += s.values[a] * x[dofs_.u(conn[a], i)];
  return u;
}

namespace {

AssemblyContext context_for(const SystemState& state, const SystemState& prev, double dt,
                            Mode mode, const std::vector<double>* epsbar) {
  AssemblyContext ctx;
  ctx.mode = mode;
  ctx.dt = dt;
  ctx.u_prev = &prev.x;
  ctx.v_prev = &prev.v;
  ctx.activation = state.activation.empty() ? nullptr : &state.activation;
  ctx.epsbar = epsbar;
  return ctx;
}

}  // namespace

Vector assemble_residual(const Assembler& a, const SystemState& state, const SystemState& prev,
                         double dt, Mode mode, const std::vector<double>* epsbar) {
  // u_prev is read through the full vector; the u block comes first.
  return a.residual(state.x, context_for(state, prev, dt, mode, epsbar));
}

SparseMatrix assemble_tangent(const Assembler& a, const SystemState& state,
                              const SystemState& prev, double dt, Mode mode,
                              const std::vector<double>* epsbar) {
  return a.tangent(state.x, context_for(state, prev, dt, mode, epsbar));
}

void split_free(const SparseMatrix& K, const DofMap& dofs, SparseMatrix* Kff,
                SparseMatrix* Kfc) {
  std::vector<Eigen::Triplet<double>> ff, fc;
  for (int j = 0; j < K.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(K, j); it; ++it) {
      const int fi = dofs.free_index(static_cast<int>(it.row()));
      if (fi < 0) continue;
      const int fj = dofs.free_index(static_cast<int>(it.col()));
      if (fj >= 0) ff.emplace_back(fi, fj, it.value());
      else if (Kfc) fc.emplace_back(fi, dofs.constrained_index(static_cast<int>(it.col())), it.value());
    }
  const int nf = static_cast<int>(dofs.free().size());
  const int nc = static_cast<int>(dofs.constrained().size());
  if (Kff) {
    Kff->resize(nf, nf);
    Kff->setFromTriplets(ff.begin(), ff.end());
  }
  if (Kfc) {
    Kfc->resize(nf, nc);
    Kfc->setFromTriplets(fc.begin(), fc.end());
  }
}

}  // namespace myo
