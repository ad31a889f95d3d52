#include "sepcross/error.hpp"

namespace sepcross {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax: return "SyntaxError";
    case ErrorKind::unknown_identifier: return "UnknownIdentifier";
    case ErrorKind::unknown_function: return "UnknownFunction";
    case ErrorKind::missing_binding: return "MissingBinding";
    case ErrorKind::domain: return "DomainError";
    case ErrorKind::model: return "ModelError";
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::not_a_saddle: return "NotASaddle";
    case ErrorKind::no_convergence: return "NoConvergence";
    case ErrorKind::topology: return "TopologyError";
    case ErrorKind::fit_diverged: return "FitDiverged";
    case ErrorKind::unsupported_regime: return "UnsupportedRegime";
    case ErrorKind::orbit: return "OrbitError";
    case ErrorKind::invalid_pseudo_phase: return "InvalidPseudoPhase";
    case ErrorKind::not_captured: return "NotCaptured";
    case ErrorKind::measurement_suspect: return "MeasurementSuspect";
    case ErrorKind::integration: return "IntegrationError";
    case ErrorKind::out_of_box: return "OutOfBox";
    case ErrorKind::on_separatrix: return "OnSeparatrix";
    case ErrorKind::window_too_short: return "WindowTooShort";
  }
  return "Error";
}

}  // namespace sepcross
