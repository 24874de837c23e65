#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazeeg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class ErrorCode {
  MissingFile,
  SchemaError,
  ClockError,
  CoverageError,
  RangeError,
  GeometryError,
  FilterDesignError,
  TooFewChannels,
  ConvergenceError,
  AllRejected,
  OutOfBounds,
  DegenerateSignal,
  EpochTooShort,
  InvalidArgument,
  SingularCovariance,
  OneClassOnly,
  DuplicateFeatureName,
  SchemaMismatch,
  NonConvergence,
  TooFewSamples,
  NothingToReport,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch on kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Label : int { NonTarget = 0, Target = 1 };

inline double label_sign(Label l) { return l == Label::Target ? 1.0 : -1.0; }
std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

enum class SceneDomain : int { Workshop = 0, Desktop = 1 };

std::string_view to_string(SceneDomain d);
SceneDomain domain_from_string(std::string_view s);

/// SplitMix64 step; used to derive independent per-participant and per-fold
/// seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace gazeeg
