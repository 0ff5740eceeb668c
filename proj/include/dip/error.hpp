#pragma once

#include <stdexcept>
#include <string>

namespace dip {

/// Broad failure category. The CLI maps `validation` to exit code 1 and
/// `runtime` to exit code 2.
enum class ErrorKind { validation, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Input violates an operation's preconditions (bad model, bad cutoff,
/// degenerate signal, too few records for stratification, ...).
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Tensor or matrix dimensions do not chain.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Malformed DIPD/DIPW container or run configuration.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Non-finite values, failed integration, I/O failures.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::runtime, what) {}
};

class TrainingFailure : public NumericError {
 public:
  TrainingFailure(int epoch, const std::string& what)
      : NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Wraps a failure inside a pipeline stage; keeps the original kind.
class StageError : public Error {
 public:
  StageError(ErrorKind kind, const std::string& stage, const std::string& what)
      : Error(kind, "stage " + stage + ": " + what), stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace dip
