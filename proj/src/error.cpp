#include "bohmstab/error.hpp"

namespace bohmstab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NodeRegion: return "NodeRegion";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::OutOfTimeRange: return "OutOfTimeRange";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::DiracDensityRequest: return "DiracDensityRequest";
    case ErrorCode::DiracKernel: return "DiracKernel";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::TailDivergence: return "TailDivergence";
    case ErrorCode::NodeRegionEntered: return "NodeRegionEntered";
    case ErrorCode::SolverDomainExited: return "SolverDomainExited";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::InvalidNeighborhood: return "InvalidNeighborhood";
    case ErrorCode::SamplerGridTooCoarse: return "SamplerGridTooCoarse";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::TruncationThreshold: return "TruncationThreshold";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace bohmstab
