#include "myo/solver.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "myo/errors.hpp"

namespace myo {

void NewtonConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (max_iters < 1) throw ConfigError("solver max_iters must be at least 1");
  if (max_halvings < 0) throw ConfigError("solver max_halvings must be non-negative");
}

Vector linear_solve(const SparseMatrix& A, const Vector& b, const LinearSolveConfig& config,
                    int* iterations) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw LinearSolveFailure("linear_solve: dimension mismatch");
  if (b.size() == 0) return b;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    if (iterations) *iterations = 0;
    return Vector::Zero(b.size());
  }
  Vector x;
  if (config.kind == LinearSolverKind::sparse_direct) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw SingularMatrix("sparse LU: " + lu.lastErrorMessage());
    x = lu.solve(b);
    if (iterations) *iterations = 1;
    if (!x.allFinite()) throw SingularMatrix("sparse LU produced non-finite values");
    const double rel = (A * x - b).norm() / bnorm;
    if (rel > 1e-6) throw SingularMatrix("sparse LU residual " + std::to_string(rel));
  } else {
    Eigen::MINRES<SparseMatrix, Eigen::Lower | Eigen::Upper,
                  Eigen::DiagonalPreconditioner<double>>
        minres;
    minres.setTolerance(config.iterative_tol);
    minres.setMaxIterations(config.iterative_max_iters);
    minres.compute(A);
    x = minres.solve(b);
    if (iterations) *iterations = static_cast<int>(minres.iterations());
    if (!x.allFinite()) throw SingularMatrix("MINRES produced non-finite values");
    if (minres.info() != Eigen::Success)
      throw LinearSolveFailure("MINRES did not reach tolerance (error " +
                               std::to_string(minres.error()) + ")");
  }
  return x;
}

namespace {

struct Split {
  Vector r_free;
  double norm;
};

Split free_part(const Vector& r, const Vector& scale, const std::vector<int>& free) {
  Split s;
  s.r_free.resize(static_cast<Eigen::Index>(free.size()));
  double sq = 0.0;
  for (std::size_t i = 0; i < free.size(); ++i) {
    s.r_free[i] = r[free[i]];
    const double v = r[free[i]] * scale[free[i]];
    sq += v * v;
  }
  s.norm = std::sqrt(sq);
  return s;
}

bool is_inadmissible(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const NonPositiveJacobian&) {
    return true;
  } catch (const NonPositiveDilation&) {
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

SolveStats newton_solve(const NonlinearProblem& problem, Vector& x, const Vector& targets,
                        const NewtonConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = problem.size();
  const std::vector<int>& cons = problem.constrained();
  if (static_cast<int>(x.size()) != n || targets.size() != static_cast<Eigen::Index>(cons.size()))
    throw Error("newton_solve: size mismatch");

  std::vector<int> free;
  std::vector<int> free_index(n, -1), cons_index(n, -1);
  for (std::size_t i = 0; i < cons.size(); ++i) cons_index[cons[i]] = static_cast<int>(i);
  for (int d = 0; d < n; ++d)
    if (cons_index[d] < 0) {
      free_index[d] = static_cast<int>(free.size());
      free.push_back(d);
    }
  const Vector scale = problem.residual_scale();

  SolveStats stats;
  auto finish = [&] {
    stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Vector gap(cons.size());
  for (std::size_t i = 0; i < cons.size(); ++i) gap[i] = targets[i] - x[cons[i]];

  Vector r;
  SparseMatrix K;
  problem.evaluate(x, &r, &K);
  Split cur = free_part(r, scale, free);
  stats.residual_history.push_back(cur.norm);
  double ref = cur.norm;

  for (int it = 0;; ++it) {
    const bool gap_closed = gap.lpNorm<Eigen::Infinity>() == 0.0;
    const double tol = std::max(config.abs_tol, config.rel_tol * ref);
    if (gap_closed && cur.norm <= tol) {
      stats.converged = true;
      stats.iterations = it;
      finish();
      return stats;
    }
    if (it >= config.max_iters) break;

    // Split the tangent into free/free and free/constrained blocks.
    std::vector<Eigen::Triplet<double>> ff, fc;
    for (int j = 0; j < K.outerSize(); ++j)
      for (SparseMatrix::InnerIterator e(K, j); e; ++e) {
        const int fi = free_index[e.row()];
        if (fi < 0) continue;
        const int fj = free_index[e.col()];
        if (fj >= 0) ff.emplace_back(fi, fj, e.value());
        else fc.emplace_back(fi, cons_index[e.col()], e.value());
      }
    SparseMatrix Kff(static_cast<Eigen::Index>(free.size()), static_cast<Eigen::Index>(free.size()));
    SparseMatrix Kfc(static_cast<Eigen::Index>(free.size()), static_cast<Eigen::Index>(cons.size()));
    Kff.setFromTriplets(ff.begin(), ff.end());
    Kfc.setFromTriplets(fc.begin(), fc.end());
    Vector rhs = -cur.r_free;
    if (!gap_closed) rhs -= Kfc * gap;
    int lin_its = 0;
    const Vector dxf = linear_solve(Kff, rhs, config.linear, &lin_its);
    stats.linear_iterations.push_back(lin_its);

    Vector dx = Vector::Zero(n);
    for (std::size_t i = 0; i < free.size(); ++i) dx[free[i]] = dxf[i];
    for (std::size_t i = 0; i < cons.size(); ++i) dx[cons[i]] = gap[i];

    double alpha = 1.0;
    int halvings = 0;
    Vector trial, rt;
    SparseMatrix Kt;
    Split next;
    bool accepted = false;
    for (;;) {
      trial = x + alpha * dx;
      bool admissible = true;
      try {
        problem.evaluate(trial, &rt, &Kt);
      } catch (...) {
        auto e = std::current_exception();
        if (!is_inadmissible(e)) throw;
        admissible = false;
      }
      if (admissible) {
        next = free_part(rt, scale, free);
        const bool decrease =
            next.norm <= (1.0 - config.sufficient_decrease * alpha) * cur.norm;
        if (decrease || !gap_closed || halvings >= config.max_halvings) {
          accepted = true;
          break;
        }
      } else if (halvings >= config.max_halvings) {
        break;
      }
      alpha *= 0.5;
      ++halvings;
    }
    stats.halvings.push_back(halvings);
    if (!accepted) {
      stats.iterations = it + 1;
      finish();
      throw NonConvergence("line search could not find an admissible step (inverted element)",
                           stats.residual_history);
    }
    x = trial;
    r = std::move(rt);
    K = std::move(Kt);
    gap *= (1.0 - alpha);
    if (alpha == 1.0) gap.setZero();
    for (std::size_t i = 0; i < cons.size(); ++i)
      if (gap[i] == 0.0) x[cons[i]] = targets[i];
    cur = next;
    stats.residual_history.push_back(cur.norm);
    ref = std::max(ref, cur.norm);
  }
  stats.iterations = config.max_iters;
  finish();
  throw NonConvergence("Newton did not converge in " + std::to_string(config.max_iters) +
                       " iterations (scaled residual " + std::to_string(cur.norm) + ")",
                       stats.residual_history);
}

}  // namespace myo
