#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matchlab {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteObjective,
  NonFinite,
  ParseError,
  ShapeError,
  DuplicateId,
  UnknownId,
  NoValidReference,
  InsufficientCandidates,
  SingleClass,
  FoldDegenerate,
  InvalidCount,
  EmptyGroup,
  NonBinaryCovariate,
  ZeroVariance,
  RankDeficient,
  ZeroDirection,
  MissingEmbedding,
  MissingReference,
  NotPSD,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace matchlab
