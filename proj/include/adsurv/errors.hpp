#pragma once

#include <stdexcept>
#include <string>

namespace adsurv {

/// Broad failure categories. The CLI maps these onto exit codes.
enum class ErrorCategory {
  Parse,
  Validation,
  Numerical,
  InsufficientEvents,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Validation: return "validation";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::InsufficientEvents: return "insufficient_events";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Numerical errors.
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct NoSignChange : Error {
  explicit NoSignChange(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct NonFinite : Error {
  explicit NonFinite(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct ZeroEvents : Error {
  explicit ZeroEvents(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct DegenerateIncrement : Error {
  explicit DegenerateIncrement(const std::string& w)
      : Error(ErrorCategory::Numerical, w) {}
};
struct AllInformationUsed : Error {
  explicit AllInformationUsed(const std::string& w)
      : Error(ErrorCategory::Numerical, w) {}
};
struct InvalidBoundary : Error {
  explicit InvalidBoundary(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct ZeroInformation : Error {
  explicit ZeroInformation(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};

// Data and configuration errors.
struct InsufficientEvents : Error {
  explicit InsufficientEvents(const std::string& w)
      : Error(ErrorCategory::InsufficientEvents, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorCategory::Validation, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCategory::Parse, w) {}
};

}  // namespace adsurv
