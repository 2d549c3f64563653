#pragma once

#include "shapederiv/core_minimax.hpp"

#include <optional>
#include <string>

namespace shapederiv::minimax {

/// A cone QP instance with an optional perturbation direction, as stored on
/// disk: JSON with row-major nested arrays
///   {"cone": "equality", "A": [[...]], "B": [[...]], "f": [...],
///    "direction": {"A1": [[...]], "B1": [[...]], "f1": [...]}}
struct QpInstance {
    ConeQP qp;
    std::optional<PerturbationDirection> direction;
};

QpInstance parse_qp_instance(const std::string& text);
QpInstance load_qp_instance(const std::string& path);
std::string format_qp_instance(const QpInstance& instance);

}  // namespace shapederiv::minimax
