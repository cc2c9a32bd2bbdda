#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohmstab {

enum class ErrorCode {
  InvalidArgument,
  NodeRegion,
  OutOfDomain,
  OutOfTimeRange,
  UnstableStep,
  DiracDensityRequest,
  DiracKernel,
  InvalidField,
  QuadratureNotConverged,
  TailDivergence,
  NodeRegionEntered,
  SolverDomainExited,
  StepUnderflow,
  InvalidNeighborhood,
  SamplerGridTooCoarse,
  SupportMismatch,
  GridMismatch,
  TruncationThreshold,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// Errors that end one trajectory (which is then truncated) rather than the run.
constexpr bool ends_trajectory(ErrorCode code) noexcept {
  return code == ErrorCode::NodeRegionEntered || code == ErrorCode::SolverDomainExited;
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bohmstab
