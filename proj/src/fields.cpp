#include "shapederiv/fields.hpp"

#include <cmath>
#include <numbers>

namespace shapederiv::fields {

VectorField zero_force() {
    return {"zero", [](const Vec2&) { return Vec2::Zero().eval(); }, [](const Vec2&) { return Mat2::Zero().eval(); }};
}

VectorField constant_force(const Vec2& value) {
    return {"constant", [value](const Vec2&) { return value; }, [](const Vec2&) { return Mat2::Zero().eval(); }};
}

VectorField rotational_force(double c) {
    return {"rotational", [c](const Vec2& x) { return Vec2(-c * x(1), c * x(0)); },
            [c](const Vec2&) {
                Mat2 g;
                g << 0.0, -c, c, 0.0;
                return g;
            }};
}

TractionField ExactSolution::traction() const {
    auto grad = velocity_gradient;
    auto p = pressure;
    return {name, [grad, p](const Vec2& x, const Vec2& n) { return (grad(x) * n - p(x) * n).eval(); }};
}

ExactSolution pressure_gradient_solution() {
    ExactSolution s;
    s.name = "pressure-gradient";
    s.velocity = [](const Vec2&) { return Vec2::Zero().eval(); };
    s.velocity_gradient = [](const Vec2&) { return Mat2::Zero().eval(); };
    s.pressure = [](const Vec2& x) { return x(0) - 1.0; };
    s.force = constant_force(Vec2(1.0, 0.0));
    s.force.name = "pressure-gradient";
    return s;
}

ExactSolution poiseuille_solution() {
    ExactSolution s;
    s.name = "poiseuille";
    s.velocity = [](const Vec2& x) { return Vec2(x(1) * (1.0 - x(1)), 0.0); };
    s.velocity_gradient = [](const Vec2& x) {
        Mat2 g;
        g << 0.0, 1.0 - 2.0 * x(1), 0.0, 0.0;
        return g;
    };
    s.pressure = [](const Vec2& x) { return 2.0 * (1.0 - x(0)); };
    s.force = zero_force();
    s.force.name = "poiseuille";
    return s;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Derivatives of S(t) = sin²(πt).
struct Bump {
    double d0, d1, d2, d3, d4;
};

Bump bump(double t) {
    const double s = std::sin(kPi * t);
    const double s2 = std::sin(2.0 * kPi * t);
    const double c2 = std::cos(2.0 * kPi * t);
    return {s * s, kPi * s2, 2.0 * kPi * kPi * c2, -4.0 * kPi * kPi * kPi * s2, -8.0 * kPi * kPi * kPi * kPi * c2};
}

}  // namespace

ExactSolution trigonometric_solution() {
    ExactSolution s;
    s.name = "trigonometric";
    s.velocity = [](const Vec2& x) {
        const Bump a = bump(x(0));
        const Bump b = bump(x(1));
        return Vec2(a.d0 * b.d1, -a.d1 * b.d0);
    };
    s.velocity_gradient = [](const Vec2& x) {
        const Bump a = bump(x(0));
        const Bump b = bump(x(1));
        Mat2 g;
        g << a.d1 * b.d1, a.d0 * b.d2, -a.d2 * b.d0, -a.d1 * b.d1;
        return g;
    };
    s.pressure = [](const Vec2& x) { return std::cos(kPi * x(0)) * std::cos(kPi * x(1)); };
    s.force.name = "trigonometric";
    s.force.value = [](const Vec2& x) {
        const Bump a = bump(x(0));
        const Bump b = bump(x(1));
        const double px = -kPi * std::sin(kPi * x(0)) * std::cos(kPi * x(1));
        const double py = -kPi * std::cos(kPi * x(0)) * std::sin(kPi * x(1));
        return Vec2(-a.d2 * b.d1 - a.d0 * b.d3 + px, a.d3 * b.d0 + a.d1 * b.d2 + py);
    };
    s.force.gradient = [](const Vec2& x) {
        const Bump a = bump(x(0));
        const Bump b = bump(x(1));
        const double cc = std::cos(kPi * x(0)) * std::cos(kPi * x(1));
        const double ss = std::sin(kPi * x(0)) * std::sin(kPi * x(1));
        const double pxx = -kPi * kPi * cc;
        const double pxy = kPi * kPi * ss;
        const double pyy = -kPi * kPi * cc;
        Mat2 g;
        g(0, 0) = -a.d3 * b.d1 - a.d1 * b.d3 + pxx;
        g(0, 1) = -a.d2 * b.d2 - a.d0 * b.d4 + pxy;
        g(1, 0) = a.d4 * b.d0 + a.d2 * b.d2 + pxy;
        g(1, 1) = a.d3 * b.d1 + a.d1 * b.d3 + pyy;
        return g;
    };
    return s;
}

}  // namespace shapederiv::fields
