#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pressmap {

enum class ErrorCode {
  DegenerateRotation,
  DimensionMismatch,
  ShapeMismatch,
  MissingRing,
  IndexOutOfRange,
  ConfigInvalid,
  NegativePressure,
  GeometryMismatch,
  NonFinite,
  NoFeaturesEnabled,
  EmptyDataset,
  EmptyMask,
  NoContact,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRotation: return "DegenerateRotation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingRing: return "MissingRing";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::NegativePressure: return "NegativePressure";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoFeaturesEnabled: return "NoFeaturesEnabled";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NoContact: return "NoContact";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace pressmap
