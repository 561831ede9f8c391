#pragma once

#include <stdexcept>
#include <string>

namespace nhp {

/// Base class for every error raised by the workbench.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

/// An operation that needs field structure was handed a composite modulus.
struct CompositeModulus : Error {
  using Error::Error;
};

struct InvalidParameters : Error {
  using Error::Error;
};

/// Reduction mod q is not injective on [-B, B] (q <= 2B).
struct AliasError : Error {
  using Error::Error;
};

struct DecodeError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured cap.
struct CapExceeded : Error {
  CapExceeded(const std::string& what, std::string required)
      : Error(what), required_count(std::move(required)) {}
  std::string required_count;
};

/// A config file field is missing or malformed. `line` is 1-based, 0 when unknown.
struct ConfigError : Error {
  ConfigError(const std::string& what, int line_no)
      : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}
  int line = 0;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct NotApplicable : Error {
  using Error::Error;
};

}  // namespace nhp
