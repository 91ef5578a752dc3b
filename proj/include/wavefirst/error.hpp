#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavefirst {

enum class ErrorCode {
  InvalidGrid,
  DimensionMismatch,
  SingularSystem,
  NonConvergence,
  SingularReducedSystem,
  NoSuchMode,
  RequiresPeriodic,
  PortInPml,
  PlaneInPml,
  ZeroTarget,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularReducedSystem: return "SingularReducedSystem";
    case ErrorCode::NoSuchMode: return "NoSuchMode";
    case ErrorCode::RequiresPeriodic: return "RequiresPeriodic";
    case ErrorCode::PortInPml: return "PortInPml";
    case ErrorCode::PlaneInPml: return "PlaneInPml";
    case ErrorCode::ZeroTarget: return "ZeroTarget";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// All library failures surface as this exception; `code()` identifies the
/// failure class so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wavefirst
