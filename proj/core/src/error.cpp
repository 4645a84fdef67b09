#include "matchlab/error.hpp"

namespace matchlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::NoValidReference: return "NoValidReference";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::FoldDegenerate: return "FoldDegenerate";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NonBinaryCovariate: return "NonBinaryCovariate";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroDirection: return "ZeroDirection";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::MissingReference: return "MissingReference";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace matchlab
