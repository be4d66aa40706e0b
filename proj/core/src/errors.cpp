#include "surfsl/errors.hpp"

namespace surfsl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::OutsideTube: return "OutsideTube";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotOnManifold: return "NotOnManifold";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::Inconsistent: return "Inconsistent";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NoPolynomialReproduction: return "NoPolynomialReproduction";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TubeExceeded: return "TubeExceeded";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace surfsl
