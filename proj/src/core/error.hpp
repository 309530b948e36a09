#pragma once

#include <stdexcept>
#include <string>

namespace aosr {

// Numeric values are mirrored by aosr_status in include/aosr/aosr.h.
enum class ErrorCode : int {
  Io = 1,
  Format = 2,
  EmptyInput = 3,
  Domain = 4,
  DegenerateRange = 5,
  BadWindow = 6,
  ShapeMismatch = 7,
  NegativeDepth = 8,
  EmptySet = 9,
  MissingDepth = 10,
  IndivisibleSpatialDims = 11,
  ConfigMismatch = 12,
  ZeroVector = 13,
  DegenerateAnchor = 14,
  ModelMissing = 15,
  TooSmall = 16,
  PairMismatch = 17,
  EmptyCorpus = 18,
  NonFiniteLoss = 19,
  InvalidArgument = 20,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace aosr
