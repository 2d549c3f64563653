#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace shapederiv::fields {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Globally defined analytic 2-vector field with exact gradient
/// (gradient(x)(i, j) = ∂fᵢ/∂xⱼ).
struct VectorField {
    std::string name;
    std::function<Vec2(const Vec2&)> value;
    std::function<Mat2(const Vec2&)> gradient;
};

/// Boundary load g(x, n) on Neumann edges, n the unit outward normal.
struct TractionField {
    std::string name;
    std::function<Vec2(const Vec2&, const Vec2&)> value;
};

VectorField zero_force();
VectorField constant_force(const Vec2& value);
/// f(x) = c(−x₂, x₁), equivariant under rotations about the origin.
VectorField rotational_force(double c);

/// Closed-form Stokes solution used to manufacture data and measure errors.
struct ExactSolution {
    std::string name;
    std::function<Vec2(const Vec2&)> velocity;
    std::function<Mat2(const Vec2&)> velocity_gradient;
    std::function<double(const Vec2&)> pressure;
    VectorField force;

    /// (∇u)n − p n, the natural boundary traction of the solution.
    [[nodiscard]] TractionField traction() const;
};

/// u = 0, p = x₁ − 1, f = (1, 0).
ExactSolution pressure_gradient_solution();
/// u = (x₂(1 − x₂), 0), p = 2(1 − x₁), f = 0.
ExactSolution poiseuille_solution();
/// u = curl of ψ = sin²(πx₁)sin²(πx₂), p = cos(πx₁)cos(πx₂), f = −Δu + ∇p.
/// u and ψ vanish on the boundary of the unit square.
ExactSolution trigonometric_solution();

}  // namespace shapederiv::fields
