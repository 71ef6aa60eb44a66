#pragma once

#include <stdexcept>
#include <string>

namespace dirk {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named scheme or problem does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Malformed scheme file. `line()` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Argument outside its documented domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but the requested operation does not support it.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// P and Q share a root, so the E-polynomial test does not apply.
class DegenerateStabilityFunction : public Error {
 public:
  using Error::Error;
};

class LinearSolveError : public Error {
 public:
  using Error::Error;
};

/// Newton failed to converge on a stage. Carries enough context to report the failing stage.
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, int stage, double residual)
      : Error(what), stage_(stage), residual_(residual) {}
  int stage() const noexcept { return stage_; }
  double residual() const noexcept { return residual_; }
  long step_index() const noexcept { return step_index_; }
  void set_step_index(long n) noexcept { step_index_ = n; }

 private:
  int stage_;
  double residual_;
  long step_index_ = -1;
};

/// The Richardson self-consistency check for an internally generated reference failed.
class ReferenceQualityError : public Error {
 public:
  ReferenceQualityError(const std::string& what, double coarse_fine_difference)
      : Error(what), difference_(coarse_fine_difference) {}
  double difference() const noexcept { return difference_; }

 private:
  double difference_;
};

}  // namespace dirk
