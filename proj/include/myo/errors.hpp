// Exception types shared across the engine.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace myo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// det F <= 0 at a quadrature point. `cell` is -1 when the failure is not
/// tied to a mesh cell (pointwise evaluation).
class NonPositiveJacobian : public Error {
 public:
  NonPositiveJacobian(double J, long cell = -1)
      : Error("non-positive Jacobian J=" + std::to_string(J) +
              (cell >= 0 ? " in cell " + std::to_string(cell) : std::string())),
        J_(J), cell_(cell) {}
  double jacobian() const { return J_; }
  long cell() const { return cell_; }

 private:
  double J_;
  long cell_;
};

class NonPositiveDilation : public Error {
 public:
  explicit NonPositiveDilation(double D)
      : Error("non-positive dilation D=" + std::to_string(D)) {}
};

class InvertedCell : public Error {
 public:
  InvertedCell(long cell, double detJ)
      : Error("inverted cell " + std::to_string(cell) +
              " (reference Jacobian " + std::to_string(detJ) + ")"),
        cell_(cell) {}
  long cell() const { return cell_; }

 private:
  long cell_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class GeometryInfeasible : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  /// Scaled residual norms of the failed solve, when known.
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

class LinearSolveFailure : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public LinearSolveFailure {
 public:
  using LinearSolveFailure::LinearSolveFailure;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace myo
