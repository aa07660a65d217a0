#pragma once

#include <stdexcept>
#include <string>

namespace objslam {

enum class ErrorCode {
  kInvalidDepth,
  kBadDimensions,
  kDimensionMismatch,
  kVolumeOffloaded,
  kEmptyVolume,
  kStoreIoFailure,
  kUnknownId,
  kInsufficientCorrespondences,
  kDiverged,
  kMissingFile,
  kMalformedRecord,
  kTooFewPoints,
  kDegenerateExtent,
  kUnknownNode,
  kNotConnected,
  kSingularSystem,
  kMissingIndexFile,
  kNoPairs,
  kInsufficientOverlap,
  kIoFailure,
  kInvalidSpec,
  kInvalidArgument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace objslam
