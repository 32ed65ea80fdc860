#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fks {

enum class ErrorKind {
  // configuration / validation
  NonIncreasingKnots,
  KnotOutOfDomain,
  OrderTooSmall,
  DerivativeOrderTooHigh,
  CoefficientLengthMismatch,
  SpecMismatch,
  InvalidConfig,
  UnknownGroup,
  LengthMismatch,
  // data
  PointOutOfDomain,
  DomainError,
  EmptyInterval,
  NonFiniteInput,
  TooFewCurves,
  ParseError,
  DuplicateCell,
  EmptyTable,
  ZeroVariance,
  IoError,
  // numerical
  NotPositiveDefinite,
  DegenerateDenominator,
  DegenerateKnots,
  LineSearchFailure,
  AllCandidatesSingular,
  AllCellsFailed,
  DegenerateExpectation,
};

enum class ErrorCategory { Config, Data, Numerical };

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonIncreasingKnots: return "NonIncreasingKnots";
    case ErrorKind::KnotOutOfDomain: return "KnotOutOfDomain";
    case ErrorKind::OrderTooSmall: return "OrderTooSmall";
    case ErrorKind::DerivativeOrderTooHigh: return "DerivativeOrderTooHigh";
    case ErrorKind::CoefficientLengthMismatch: return "CoefficientLengthMismatch";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnknownGroup: return "UnknownGroup";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::PointOutOfDomain: return "PointOutOfDomain";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::TooFewCurves: return "TooFewCurves";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::DegenerateKnots: return "DegenerateKnots";
    case ErrorKind::LineSearchFailure: return "LineSearchFailure";
    case ErrorKind::AllCandidatesSingular: return "AllCandidatesSingular";
    case ErrorKind::AllCellsFailed: return "AllCellsFailed";
    case ErrorKind::DegenerateExpectation: return "DegenerateExpectation";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonIncreasingKnots:
    case ErrorKind::KnotOutOfDomain:
    case ErrorKind::OrderTooSmall:
    case ErrorKind::DerivativeOrderTooHigh:
    case ErrorKind::CoefficientLengthMismatch:
    case ErrorKind::SpecMismatch:
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnknownGroup:
    case ErrorKind::LengthMismatch:
      return ErrorCategory::Config;
    case ErrorKind::PointOutOfDomain:
    case ErrorKind::DomainError:
    case ErrorKind::EmptyInterval:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::TooFewCurves:
    case ErrorKind::ParseError:
    case ErrorKind::DuplicateCell:
    case ErrorKind::EmptyTable:
    case ErrorKind::ZeroVariance:
    case ErrorKind::IoError:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numerical;
  }
}

/// Exception carrying a machine-readable kind and the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        module_(std::move(module)),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string detail_;
};

}  // namespace fks
