#include "loadid/error.hpp"

namespace loadid {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::SingularMass: return "singular-mass";
    case ErrorKind::InvalidStep: return "invalid-step";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InvalidDof: return "invalid-dof";
    case ErrorKind::InvalidBand: return "invalid-band";
    case ErrorKind::Truncation: return "truncation";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::DegenerateChannel: return "degenerate-channel";
    case ErrorKind::InvalidScenario: return "invalid-scenario";
    case ErrorKind::IllConditioned: return "ill-conditioned-innovation";
    case ErrorKind::SensitivityFailure: return "sensitivity-failure";
    case ErrorKind::RegularizationRequired: return "regularization-required";
    case ErrorKind::InvalidLength: return "invalid-length";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::TrainingDivergence: return "training-divergence";
    case ErrorKind::DegenerateTruth: return "degenerate-truth";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace loadid
