#include "mixbound/error.hpp"

namespace mixbound {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NonUniqueStationary: return "NonUniqueStationary";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotDiscrete: return "NotDiscrete";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::NonpositiveGamma: return "NonpositiveGamma";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::ZeroSpectralNorm: return "ZeroSpectralNorm";
    case ErrorCode::BadDelta: return "BadDelta";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace mixbound
