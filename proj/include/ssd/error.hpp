#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssd {

enum class ErrorCode {
  AllZero,
  InvalidEntry,
  InvalidDistribution,
  EmptySet,
  IndexOutOfRange,
  DuplicateIndex,
  ZeroMassSupport,
  InvalidOrder,
  SupportViolation,
  OutOfRange,
  NonPositiveTemperature,
  InvalidConfig,
  NormalFormViolation,
  CompositionViolation,
  Divergence,
  ZeroProbabilityOnSupport,
  KTooLarge,
  RankOutOfRange,
  InvalidRatio,
  EmptyEvent,
  ZeroMassEvent,
  FileNotFound,
  ParseError,
  IoError,
  EmptyReport,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ssd
