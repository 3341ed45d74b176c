#pragma once

#include <stdexcept>
#include <string>

namespace specinit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when an iterative eigensolver exhausts its iteration budget.
class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double best_residual)
      : Error("eigensolver did not converge after " + std::to_string(iterations) +
              " iterations (best residual " + std::to_string(best_residual) + ")"),
        iterations_(iterations),
        best_residual_(best_residual) {}

  int iterations() const { return iterations_; }
  double best_residual() const { return best_residual_; }

 private:
  int iterations_;
  double best_residual_;
};

class DisconnectedGraph : public Error {
 public:
  DisconnectedGraph() : Error("measurement graph is not connected") {}
  explicit DisconnectedGraph(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

class MixedDimension : public Error {
 public:
  MixedDimension() : Error("SE2 and SE3 records in the same file") {}
};

/// Operation requested in a mode the graph does not support (e.g. full-pose on
/// rotation-only data).
class ModeError : public Error {
 public:
  using Error::Error;
};

class TopologyMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveGap : public Error {
 public:
  explicit NonPositiveGap(double gap)
      : Error("spectral gap must be positive, got " + std::to_string(gap)) {}
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace specinit
