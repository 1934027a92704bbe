#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loadid {

enum class ErrorKind {
  InvalidSpec,
  SingularMass,
  InvalidStep,
  InvalidParameter,
  InvalidDof,
  InvalidBand,
  Truncation,
  Divergence,
  DegenerateChannel,
  InvalidScenario,
  IllConditioned,
  SensitivityFailure,
  RegularizationRequired,
  InvalidLength,
  Shape,
  TrainingDivergence,
  DegenerateTruth,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers map failures
// onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix, for re-wrapping with context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// Thrown when a time-stepping routine produces a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(ErrorKind::Divergence, what + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace loadid
