#pragma once

#include <stdexcept>
#include <string>

namespace deproj {

/// Failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  kUsage,
  kValidation,
  kDimension,
  kDomain,
  kNotInDomain,
  kNumerical,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kNotInDomain: return "not-in-domain";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorKind::kDimension, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

/// The observed image admits no feasible null intercept.
class NotInDomainError : public Error {
 public:
  explicit NotInDomainError(const std::string& what) : Error(ErrorKind::kNotInDomain, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::kValidation, what) {}
};

/// Process exit code for an error kind: 1 usage, 2 invalid input, 3 numerical failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kNumerical: return 3;
    default: return 2;
  }
}

#define DEPROJ_REQUIRE(cond, ErrorType, msg) \
  do {                                       \
    if (!(cond)) throw ErrorType(msg);       \
  } while (0)

}  // namespace deproj
