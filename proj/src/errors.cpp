#include "thermo/errors.hpp"

namespace thermo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedCsv: return "MalformedCsv";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::DegenerateNode: return "DegenerateNode";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::AllDegenerate: return "AllDegenerate";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::HeadsDivisibility: return "HeadsDivisibility";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::UnmappedNode: return "UnmappedNode";
    case ErrorKind::EmptyReport: return "EmptyReport";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace thermo
