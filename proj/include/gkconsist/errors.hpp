#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gkconsist {

/// Failure categories surfaced by the library. The harness records these as
/// the `error_code` column instead of aborting a sweep.
enum class ErrorKind {
  input,             ///< malformed or non-finite arguments, shape mismatch
  config,            ///< invalid scenario / experiment configuration
  singular_block,    ///< K11 too ill-conditioned to eliminate
  debias_undefined,  ///< 1 - lambda too close to zero
  domain,            ///< argument outside a function's domain
  diagnostics,       ///< a quantity violates a modeling assumption beyond roundoff
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input_error";
    case ErrorKind::config: return "config_error";
    case ErrorKind::singular_block: return "singular_block";
    case ErrorKind::debias_undefined: return "debias_undefined";
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::diagnostics: return "diagnostics_error";
  }
  return "unknown_error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view code() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorKind::singular_block, what) {}
};

class DebiasUndefinedError : public Error {
 public:
  explicit DebiasUndefinedError(const std::string& what)
      : Error(ErrorKind::debias_undefined, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class DiagnosticsError : public Error {
 public:
  explicit DiagnosticsError(const std::string& what)
      : Error(ErrorKind::diagnostics, what) {}
};

}  // namespace gkconsist
