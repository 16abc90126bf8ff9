#include "hocurve/error.hpp"

namespace hocurve {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parameter: return "parameter";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Unsupported: return "unsupported";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::DegenerateReference: return "degenerate-reference";
    case ErrorCategory::InvalidConfiguration: return "invalid-configuration";
    case ErrorCategory::Projection: return "projection-singularity";
    case ErrorCategory::PeriodicMatching: return "periodic-matching";
    case ErrorCategory::SingularSmoother: return "singular-smoother";
    case ErrorCategory::NoConvergence: return "no-convergence";
    case ErrorCategory::Stagnation: return "stagnation";
    case ErrorCategory::NotConverged: return "not-converged";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

}  // namespace hocurve
