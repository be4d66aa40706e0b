#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surfsl {

enum class ErrorCode {
  InvalidArgument,
  SingularProjection,
  OutsideTube,
  NoConvergence,
  NotOnManifold,
  GenerationFailed,
  Inconsistent,
  MaxIterations,
  NumericalFailure,
  NoPolynomialReproduction,
  RankDeficient,
  TubeExceeded,
  NonPositiveInput,
  DivisionByZero,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception type thrown by every library routine. The code identifies the
/// failure class so callers can react (e.g. grow a ball, halve a step).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace surfsl
