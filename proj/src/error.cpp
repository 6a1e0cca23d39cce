#include "rsde/error.hpp"

namespace rsde {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::AmbiguousProjection: return "AmbiguousProjection";
        case ErrorCode::NotOnSmoothBoundary: return "NotOnSmoothBoundary";
        case ErrorCode::DensityVanishes: return "DensityVanishes";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::CoNormalDegenerate: return "CoNormalDegenerate";
        case ErrorCode::ExceptionalBoundaryHit: return "ExceptionalBoundaryHit";
        case ErrorCode::InvalidStart: return "InvalidStart";
        case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
        case ErrorCode::UnboundedDomain: return "UnboundedDomain";
        case ErrorCode::SolverFailure: return "SolverFailure";
        case ErrorCode::OracleMissing: return "OracleMissing";
        case ErrorCode::SingularSigma: return "SingularSigma";
        case ErrorCode::NotAdmissible: return "NotAdmissible";
        case ErrorCode::EllipticityViolation: return "EllipticityViolation";
        case ErrorCode::SingularityGuard: return "SingularityGuard";
        case ErrorCode::AmbiguousWallContact: return "AmbiguousWallContact";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace rsde
