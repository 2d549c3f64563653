#pragma once

#include "shapederiv/slope.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace shapederiv::flow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct ZeroVelocity {};
struct ConstantVelocity {
    Vec2 b = Vec2::Zero();
};
/// Λ(x) = Mx + b
struct AffineVelocity {
    Mat2 M = Mat2::Zero();
    Vec2 b = Vec2::Zero();
};
/// Λ(x) = ω(−x₂, x₁)
struct RotationVelocity {
    double omega = 0.0;
};
/// Λᵢ(x) = cᵢ₀ + cᵢ₁x₁ + cᵢ₂x₂ + cᵢ₃x₁² + cᵢ₄x₁x₂ + cᵢ₅x₂², one row per component.
struct QuadraticVelocity {
    Eigen::Matrix<double, 2, 6> coeffs = Eigen::Matrix<double, 2, 6>::Zero();
};

/// Axis-aligned box [lo, hi]. The velocity is kept as is inside the box and
/// multiplied by a C² quintic ramp that falls to zero at distance `ramp`
/// outside it (per axis, product form).
struct SupportWindow {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Ones();
    double ramp = 0.1;
};

/// Stationary velocity Λ of the domain flow with closed-form Jacobian.
class VelocityField {
public:
    using Kind = std::variant<ZeroVelocity, ConstantVelocity, AffineVelocity, RotationVelocity, QuadraticVelocity>;

    VelocityField() = default;
    explicit VelocityField(Kind kind, std::optional<SupportWindow> window = std::nullopt);

    static VelocityField zero() { return VelocityField(ZeroVelocity{}); }
    static VelocityField constant(const Vec2& b) { return VelocityField(ConstantVelocity{b}); }
    static VelocityField affine(const Mat2& M, const Vec2& b) { return VelocityField(AffineVelocity{M, b}); }
    static VelocityField rotation(double omega) { return VelocityField(RotationVelocity{omega}); }
    static VelocityField quadratic(const Eigen::Matrix<double, 2, 6>& c) { return VelocityField(QuadraticVelocity{c}); }

    [[nodiscard]] Vec2 evaluate(const Vec2& x) const;
    /// ∇Λ with entries ∂Λᵢ/∂xⱼ.
    [[nodiscard]] Mat2 jacobian(const Vec2& x) const;
    [[nodiscard]] double divergence(const Vec2& x) const { return jacobian(x).trace(); }

    /// −Λ, generating the inverse flow.
    [[nodiscard]] VelocityField negated() const;
    /// Λ₁ + Λ₂ when both are polynomial and share no window; used for
    /// linearity checks. Throws ConfigError otherwise.
    [[nodiscard]] VelocityField plus(const VelocityField& other) const;

    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] const std::optional<SupportWindow>& window() const { return window_; }
    [[nodiscard]] bool is_zero() const { return std::holds_alternative<ZeroVelocity>(kind_); }
    [[nodiscard]] std::string_view kind_name() const;

private:
    Kind kind_ = ZeroVelocity{};
    std::optional<SupportWindow> window_;
};

/// Image φ_s(x) and Jacobian ∇φ_s(x) of the flow.
struct FlowSample {
    Vec2 point = Vec2::Zero();
    Mat2 jacobian = Mat2::Identity();
    double det = 1.0;
};

inline constexpr int kDefaultSteps = 64;

/// Integrates dφ/ds = Λ(φ), dJ/ds = ∇Λ(φ)·J from (x, I) with classical RK4
/// and `steps` equal steps of size s/steps. Throws NonPositiveJacobian when
/// det J ≤ 0 at any step.
FlowSample integrate_flow(const VelocityField& field, const Vec2& x, double s, int steps = kDefaultSteps);

/// φ_s⁻¹(y), integrating −Λ from y.
Vec2 inverse_flow(const VelocityField& field, const Vec2& y, double s, int steps = kDefaultSteps);

struct ExpansionRow {
    double s = 0.0;
    double transform_residual = 0.0;    ///< ‖∇φ_s⁻¹(φ_s) − I + s∇Λ‖ (Frobenius)
    double determinant_residual = 0.0;  ///< |det ∇φ_s − 1 − s div Λ|
};

struct ExpansionReport {
    std::vector<ExpansionRow> rows;
    SlopeFit transform_slope;
    SlopeFit determinant_slope;
};

/// First-order expansions of the transformation matrix and Jacobian
/// determinant at x, with log-log slopes of their residuals over s_list.
ExpansionReport expansion_check(const VelocityField& field, const Vec2& x, const std::vector<double>& s_list,
                                int steps = kDefaultSteps, double exact_threshold = 1e-14);

}  // namespace shapederiv::flow
