#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace manifold_agg {

enum class ErrorKind {
  InvalidArgument,
  OffManifold,
  AntipodalPair,
  ExceedsInjectivity,
  RadiusTooLarge,
  DiameterTooLarge,
  MissingGlobalConstant,
  GridMismatch,
  DiameterViolation,
  NoContraction,
  MaxIterExceeded,
  NotAttractive,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OffManifold: return "OffManifold";
    case ErrorKind::AntipodalPair: return "AntipodalPair";
    case ErrorKind::ExceedsInjectivity: return "ExceedsInjectivity";
    case ErrorKind::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorKind::DiameterTooLarge: return "DiameterTooLarge";
    case ErrorKind::MissingGlobalConstant: return "MissingGlobalConstant";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DiameterViolation: return "DiameterViolation";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::NotAttractive: return "NotAttractive";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Errors raised by the sphere cut-locus and diameter guards.
  bool is_guard_violation() const noexcept {
    return kind_ == ErrorKind::AntipodalPair || kind_ == ErrorKind::ExceedsInjectivity ||
           kind_ == ErrorKind::DiameterViolation || kind_ == ErrorKind::DiameterTooLarge ||
           kind_ == ErrorKind::RadiusTooLarge;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace manifold_agg
