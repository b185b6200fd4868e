#include "ppls/error.hpp"

namespace ppls {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateColumns: return "DegenerateColumns";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NearDegenerateComponents: return "NearDegenerateComponents";
    case ErrorCode::NonSquareCrossBlock: return "NonSquareCrossBlock";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case ErrorCode::ComponentOutOfRange: return "ComponentOutOfRange";
    case ErrorCode::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorCode::ScenarioFailed: return "ScenarioFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace ppls
