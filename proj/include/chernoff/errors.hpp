#pragma once

#include <stdexcept>
#include <string>

namespace chernoff {

/// Broad failure category. The CLI maps these onto its exit codes.
enum class ErrorKind {
  validation,  // malformed or inconsistent input (exit code 2)
  numeric,     // numerical-domain failure on well-formed input (exit code 3)
  internal,    // everything else (exit code 4)
};

/// Base of every exception thrown by the library. `code()` is a stable,
/// machine-readable name such as "CycleError".
class Error : public std::runtime_error {
 public:
  Error(std::string code, ErrorKind kind, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)), kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

#define CHERNOFF_DEFINE_ERROR(Name, Kind)                   \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& message)               \
        : Error(#Name, ErrorKind::Kind, message) {}         \
  };

// Input validation.
CHERNOFF_DEFINE_ERROR(ParseError, validation)
CHERNOFF_DEFINE_ERROR(InvalidArgument, validation)
CHERNOFF_DEFINE_ERROR(CycleError, validation)
CHERNOFF_DEFINE_ERROR(DisconnectedError, validation)
CHERNOFF_DEFINE_ERROR(WeightOutOfRange, validation)
CHERNOFF_DEFINE_ERROR(DuplicateEdge, validation)
CHERNOFF_DEFINE_ERROR(InvalidNode, validation)
CHERNOFF_DEFINE_ERROR(EdgeNotShared, validation)
CHERNOFF_DEFINE_ERROR(WeightFactorMismatch, validation)
CHERNOFF_DEFINE_ERROR(EdgeNotFound, validation)
CHERNOFF_DEFINE_ERROR(WouldCreateCycle, validation)
CHERNOFF_DEFINE_ERROR(InvalidBudget, validation)
CHERNOFF_DEFINE_ERROR(InvalidHypothesisSet, validation)

// Numerical domain.
CHERNOFF_DEFINE_ERROR(DimensionMismatch, numeric)
CHERNOFF_DEFINE_ERROR(NotSymmetric, numeric)
CHERNOFF_DEFINE_ERROR(NotPositiveDefinite, numeric)
CHERNOFF_DEFINE_ERROR(NonPositiveEigenvalue, numeric)
CHERNOFF_DEFINE_ERROR(DegenerateSpectrum, numeric)
CHERNOFF_DEFINE_ERROR(DeterminantMismatch, numeric)
CHERNOFF_DEFINE_ERROR(RankDeficientProjection, numeric)

#undef CHERNOFF_DEFINE_ERROR

}  // namespace chernoff
