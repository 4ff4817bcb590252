#pragma once

#include <stdexcept>
#include <string>

namespace sratts {

enum class ErrorKind {
  kInvalidUtterance,
  kEmptyCorpus,
  kDegenerateDistribution,
  kInsufficientData,
  kMissingFile,
  kShapeMismatch,
  kDuplicateId,
  kOutOfRange,
  kConfiguration,
  kMode,
  kPositionalHorizon,
  kDivergence,
  kFormat,
  kIo,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the
// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by subset selection when a restricted pool cannot meet the budget.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& message, double achievable_seconds)
      : Error(ErrorKind::kInsufficientData, message),
        achievable_seconds_(achievable_seconds) {}

  double achievable_seconds() const noexcept { return achievable_seconds_; }

 private:
  double achievable_seconds_;
};

}  // namespace sratts
