#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsde {

/// Failure categories raised by the library. Every thrown `rsde::Error`
/// carries exactly one of these.
enum class ErrorCode {
    InvalidArgument,
    AmbiguousProjection,
    NotOnSmoothBoundary,
    DensityVanishes,
    NotPositiveDefinite,
    CoNormalDegenerate,
    ExceptionalBoundaryHit,
    InvalidStart,
    NonFiniteIntegrand,
    GridMismatch,
    EmptyEnsemble,
    UnboundedDomain,
    SolverFailure,
    OracleMissing,
    SingularSigma,
    NotAdmissible,
    EllipticityViolation,
    SingularityGuard,
    AmbiguousWallContact,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rsde
