#include "gazeeg/common.hpp"

namespace gazeeg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ClockError: return "ClockError";
    case ErrorCode::CoverageError: return "CoverageError";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::FilterDesignError: return "FilterDesignError";
    case ErrorCode::TooFewChannels: return "TooFewChannels";
    case ErrorCode::ConvergenceError: return "ConvergenceError";
    case ErrorCode::AllRejected: return "AllRejected";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::EpochTooShort: return "EpochTooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::DuplicateFeatureName: return "DuplicateFeatureName";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NothingToReport: return "NothingToReport";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view to_string(Label l) { return l == Label::Target ? "target" : "nontarget"; }

Label label_from_string(std::string_view s) {
  if (s == "target") return Label::Target;
  if (s == "nontarget") return Label::NonTarget;
  throw Error(ErrorCode::SchemaError, "unknown label '" + std::string(s) + "'");
}

std::string_view to_string(SceneDomain d) {
  return d == SceneDomain::Workshop ? "workshop" : "desktop";
}

SceneDomain domain_from_string(std::string_view s) {
  if (s == "workshop") return SceneDomain::Workshop;
  if (s == "desktop") return SceneDomain::Desktop;
  throw Error(ErrorCode::SchemaError, "unknown scene domain '" + std::string(s) + "'");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace gazeeg
