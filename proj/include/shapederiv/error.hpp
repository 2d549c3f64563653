#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapederiv {

/// Failure categories surfaced by the library. The CLI prints the category
/// name in front of every error line.
enum class ErrorKind {
    DimensionMismatch,
    NotPositiveDefinite,
    RankDeficientB,
    MaxIterations,
    NonPositiveJacobian,
    InvertedElement,
    EmptyDirichletBoundary,
    SingularSystem,
    UnsolvedSolution,
    ParseError,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace shapederiv
