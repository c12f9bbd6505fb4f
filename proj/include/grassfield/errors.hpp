#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grassfield {

enum class ErrorCode {
  AmbientMismatch,
  RankMismatch,
  NonOrthonormal,
  SingularProduct,
  TangencyViolation,
  DomainError,
  DegenerateField,
  InsufficientRank,
  NonFinite,
  DimensionUnsupported,
  OutsideSimplex,
  DuplicatePoint,
  NonPositiveSingular,
  NothingToRefine,
  ModelFailure,
  ExchangeTimeout,
  MalformedSnapshot,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AmbientMismatch: return "AmbientMismatch";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::NonOrthonormal: return "NonOrthonormal";
    case ErrorCode::SingularProduct: return "SingularProduct";
    case ErrorCode::TangencyViolation: return "TangencyViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateField: return "DegenerateField";
    case ErrorCode::InsufficientRank: return "InsufficientRank";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::OutsideSimplex: return "OutsideSimplex";
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::NonPositiveSingular: return "NonPositiveSingular";
    case ErrorCode::NothingToRefine: return "NothingToRefine";
    case ErrorCode::ModelFailure: return "ModelFailure";
    case ErrorCode::ExchangeTimeout: return "ExchangeTimeout";
    case ErrorCode::MalformedSnapshot: return "MalformedSnapshot";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace grassfield
