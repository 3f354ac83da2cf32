#pragma once

#include <stdexcept>
#include <string>

namespace mixbound {

enum class ErrorCode {
  InvalidSpec,
  NonUniqueStationary,
  DimensionMismatch,
  TooLarge,
  NotDiscrete,
  BadLabel,
  NonpositiveGamma,
  EmptyDataset,
  WrongKind,
  DivergedLoss,
  ZeroSpectralNorm,
  BadDelta,
  OutOfRange,
  Io,
  Usage,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mixbound
