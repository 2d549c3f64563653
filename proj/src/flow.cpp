#include "shapederiv/flow.hpp"

#include "shapederiv/error.hpp"

#include <cmath>

namespace shapederiv::flow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct Ramp {
    double value = 1.0;
    double slope = 0.0;
};

// 1 − (10t³ − 15t⁴ + 6t⁵), C² at both ends.
Ramp axis_ramp(double x, double lo, double hi, double width) {
    double dist = 0.0;
    double dir = 0.0;
    if (x < lo) {
        dist = lo - x;
        dir = -1.0;
    } else if (x > hi) {
        dist = x - hi;
        dir = 1.0;
    } else {
        return {};
    }
    const double t = dist / width;
    if (t >= 1.0) return {0.0, 0.0};
    const double t3 = t * t * t;
    const double value = 1.0 - t3 * (10.0 - 15.0 * t + 6.0 * t * t);
    const double dvalue_dt = -30.0 * t * t * (1.0 - t) * (1.0 - t);
    return {value, dvalue_dt * dir / width};
}

struct Cutoff {
    double value = 1.0;
    Vec2 gradient = Vec2::Zero();
};

Cutoff cutoff(const std::optional<SupportWindow>& window, const Vec2& x) {
    if (!window) return {};
    const Ramp r0 = axis_ramp(x(0), window->lo(0), window->hi(0), window->ramp);
    const Ramp r1 = axis_ramp(x(1), window->lo(1), window->hi(1), window->ramp);
    return {r0.value * r1.value, Vec2(r0.slope * r1.value, r0.value * r1.slope)};
}

Vec2 raw_value(const VelocityField::Kind& kind, const Vec2& x) {
    return std::visit(overloaded{
                          [](const ZeroVelocity&) -> Vec2 { return Vec2::Zero(); },
                          [](const ConstantVelocity& c) -> Vec2 { return c.b; },
                          [&](const AffineVelocity& a) -> Vec2 { return a.M * x + a.b; },
                          [&](const RotationVelocity& r) -> Vec2 { return r.omega * Vec2(-x(1), x(0)); },
                          [&](const QuadraticVelocity& q) -> Vec2 {
                              Eigen::Matrix<double, 6, 1> mono;
                              mono << 1.0, x(0), x(1), x(0) * x(0), x(0) * x(1), x(1) * x(1);
                              return q.coeffs * mono;
                          },
                      },
                      kind);
}

Mat2 raw_jacobian(const VelocityField::Kind& kind, const Vec2& x) {
    return std::visit(overloaded{
                          [](const ZeroVelocity&) -> Mat2 { return Mat2::Zero(); },
                          [](const ConstantVelocity&) -> Mat2 { return Mat2::Zero(); },
                          [](const AffineVelocity& a) -> Mat2 { return a.M; },
                          [](const RotationVelocity& r) -> Mat2 {
                              Mat2 j;
                              j << 0.0, -r.omega, r.omega, 0.0;
                              return j;
                          },
                          [&](const QuadraticVelocity& q) -> Mat2 {
                              Mat2 j;
                              for (int i = 0; i < 2; ++i) {
                                  const auto c = q.coeffs.row(i);
                                  j(i, 0) = c(1) + 2.0 * c(3) * x(0) + c(4) * x(1);
                                  j(i, 1) = c(2) + c(4) * x(0) + 2.0 * c(5) * x(1);
                              }
                              return j;
                          },
                      },
                      kind);
}

Eigen::Matrix<double, 2, 6> as_quadratic(const VelocityField::Kind& kind) {
    Eigen::Matrix<double, 2, 6> c = Eigen::Matrix<double, 2, 6>::Zero();
    std::visit(overloaded{
                   [](const ZeroVelocity&) {},
                   [&](const ConstantVelocity& v) { c.col(0) = v.b; },
                   [&](const AffineVelocity& a) {
                       c.col(0) = a.b;
                       c.col(1) = a.M.col(0);
                       c.col(2) = a.M.col(1);
                   },
                   [&](const RotationVelocity& r) {
                       c(0, 2) = -r.omega;
                       c(1, 1) = r.omega;
                   },
                   [&](const QuadraticVelocity& q) { c = q.coeffs; },
               },
               kind);
    return c;
}

}  // namespace

VelocityField::VelocityField(Kind kind, std::optional<SupportWindow> window)
    : kind_(std::move(kind)), window_(std::move(window)) {
    if (window_ && !(window_->ramp > 0.0 && (window_->hi.array() >= window_->lo.array()).all())) {
        throw Error(ErrorKind::ConfigError, "support window needs lo <= hi and a positive ramp width");
    }
}

Vec2 VelocityField::evaluate(const Vec2& x) const {
    const Vec2 v = raw_value(kind_, x);
    if (!window_) return v;
    return cutoff(window_, x).value * v;
}

Mat2 VelocityField::jacobian(const Vec2& x) const {
    const Mat2 j = raw_jacobian(kind_, x);
    if (!window_) return j;
    const Cutoff c = cutoff(window_, x);
    return c.value * j + raw_value(kind_, x) * c.gradient.transpose();
}

VelocityField VelocityField::negated() const {
    Kind neg = std::visit(overloaded{
                              [](const ZeroVelocity& z) -> Kind { return z; },
                              [](const ConstantVelocity& c) -> Kind { return ConstantVelocity{-c.b}; },
                              [](const AffineVelocity& a) -> Kind { return AffineVelocity{-a.M, -a.b}; },
                              [](const RotationVelocity& r) -> Kind { return RotationVelocity{-r.omega}; },
                              [](const QuadraticVelocity& q) -> Kind { return QuadraticVelocity{-q.coeffs}; },
                          },
                          kind_);
    return VelocityField(std::move(neg), window_);
}

VelocityField VelocityField::plus(const VelocityField& other) const {
    if (window_ || other.window_) {
        throw Error(ErrorKind::ConfigError, "sum of windowed velocity fields is not supported");
    }
    return VelocityField(QuadraticVelocity{as_quadratic(kind_) + as_quadratic(other.kind_)});
}

std::string_view VelocityField::kind_name() const {
    return std::visit(overloaded{
                          [](const ZeroVelocity&) { return std::string_view("zero"); },
                          [](const ConstantVelocity&) { return std::string_view("constant"); },
                          [](const AffineVelocity&) { return std::string_view("affine"); },
                          [](const RotationVelocity&) { return std::string_view("rotation"); },
                          [](const QuadraticVelocity&) { return std::string_view("quadratic"); },
                      },
                      kind_);
}

FlowSample integrate_flow(const VelocityField& field, const Vec2& x, double s, int steps) {
    if (steps < 1) {
        throw Error(ErrorKind::ConfigError, "integrate_flow needs at least one step");
    }
    const double h = s / static_cast<double>(steps);
    Vec2 p = x;
    Mat2 J = Mat2::Identity();
    for (int k = 0; k < steps; ++k) {
        const Vec2 k1p = field.evaluate(p);
        const Mat2 k1j = field.jacobian(p) * J;
        const Vec2 p2 = p + 0.5 * h * k1p;
        const Mat2 J2 = J + 0.5 * h * k1j;
        const Vec2 k2p = field.evaluate(p2);
        const Mat2 k2j = field.jacobian(p2) * J2;
        const Vec2 p3 = p + 0.5 * h * k2p;
        const Mat2 J3 = J + 0.5 * h * k2j;
        const Vec2 k3p = field.evaluate(p3);
        const Mat2 k3j = field.jacobian(p3) * J3;
        const Vec2 p4 = p + h * k3p;
        const Mat2 J4 = J + h * k3j;
        const Vec2 k4p = field.evaluate(p4);
        const Mat2 k4j = field.jacobian(p4) * J4;
        p += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        J += (h / 6.0) * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
        if (!(J.determinant() > 0.0)) {
            throw Error(ErrorKind::NonPositiveJacobian, "flow Jacobian lost positivity; s is outside the diffeomorphism range");
        }
    }
    return {p, J, J.determinant()};
}

Vec2 inverse_flow(const VelocityField& field, const Vec2& y, double s, int steps) {
    return integrate_flow(field.negated(), y, s, steps).point;
}

ExpansionReport expansion_check(const VelocityField& field, const Vec2& x, const std::vector<double>& s_list,
                                int steps, double exact_threshold) {
    ExpansionReport report;
    const Mat2 grad = field.jacobian(x);
    const double div = grad.trace();
    std::vector<double> r1;
    std::vector<double> r2;
    for (double s : s_list) {
        const FlowSample sample = integrate_flow(field, x, s, steps);
        // ∇_y φ_s⁻¹ at φ_s(x) is the inverse of ∇φ_s(x).
        const Mat2 inverse_transform = sample.jacobian.inverse();
        const double t = (inverse_transform - Mat2::Identity() + s * grad).norm();
        const double d = std::abs(sample.det - 1.0 - s * div);
        report.rows.push_back({s, t, d});
        r1.push_back(t);
        r2.push_back(d);
    }
    report.transform_slope = loglog_slope(s_list, r1, exact_threshold);
    report.determinant_slope = loglog_slope(s_list, r2, exact_threshold);
    return report;
}

}  // namespace shapederiv::flow
