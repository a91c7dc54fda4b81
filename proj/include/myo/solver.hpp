// Newton iteration with backtracking line search and the linear solve.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace myo {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class LinearSolverKind { sparse_direct, iterative };

struct LinearSolveConfig {
  LinearSolverKind kind = LinearSolverKind::sparse_direct;
  double iterative_tol = 1e-10;
  int iterative_max_iters = 20000;
};

struct NewtonConfig {
  double abs_tol = 1e-9;  // on the scaled residual norm
  double rel_tol = 1e-8;
  int max_iters = 25;
  int max_halvings = 8;
  double sufficient_decrease = 1e-4;
  LinearSolveConfig linear;

  void validate() const;
};

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // scaled norms, one per evaluation accepted
  std::vector<int> linear_iterations;
  std::vector<int> halvings;
  double wall_time = 0.0;  // s
};

/// A nonlinear system R(x) = 0 with some entries of x prescribed.
class NonlinearProblem {
 public:
  virtual ~NonlinearProblem() = default;
  virtual int size() const = 0;
  /// Sorted indices of prescribed entries.
  virtual const std::vector<int>& constrained() const = 0;
  /// Full-length residual and (when K is non-null) full tangent. May throw
  /// NonPositiveJacobian / NonPositiveDilation for inadmissible x.
  virtual void evaluate(const Vector& x, Vector* r, SparseMatrix* K) const = 0;
  /// Positive weights applied before taking the residual norm.
  virtual Vector residual_scale() const { return Vector::Ones(size()); }
};

/// Solves from x (whose constrained entries hold the previous values) to a
/// state whose constrained entries equal `targets` (ordered as
/// constrained()). Throws NonConvergence after max_iters; x then holds the
/// last iterate and `stats` the history.
SolveStats newton_solve(const NonlinearProblem& problem, Vector& x, const Vector& targets,
                        const NewtonConfig& config);

/// Solves A x = b. Throws SingularMatrix or LinearSolveFailure.
Vector linear_solve(const SparseMatrix& A, const Vector& b,
                    const LinearSolveConfig& config = {}, int* iterations = nullptr);

}  // namespace myo
