#include "shapederiv/error.hpp"

namespace shapederiv {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::RankDeficientB: return "RankDeficientB";
        case ErrorKind::MaxIterations: return "MaxIterations";
        case ErrorKind::NonPositiveJacobian: return "NonPositiveJacobian";
        case ErrorKind::InvertedElement: return "InvertedElement";
        case ErrorKind::EmptyDirichletBoundary: return "EmptyDirichletBoundary";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::UnsolvedSolution: return "UnsolvedSolution";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Error";
}

}  // namespace shapederiv
