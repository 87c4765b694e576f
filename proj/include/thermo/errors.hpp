#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermo {

/// Every failure raised by the library carries one of these kinds so callers
/// (and the CLI exit path) can branch without parsing messages.
enum class ErrorKind {
  MalformedCsv,
  NonMonotonicTime,
  TooShort,
  DegenerateNode,
  InvalidArgument,
  Unstable,
  NonFinite,
  AllDegenerate,
  DimensionMismatch,
  ShapeMismatch,
  NonScalarLoss,
  HeadsDivisibility,
  NonFiniteGradient,
  Diverged,
  UnmappedNode,
  EmptyReport,
  ConfigError,
  IoError,
  UsageError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace thermo
