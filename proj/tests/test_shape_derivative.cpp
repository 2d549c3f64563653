#include "shapederiv/error.hpp"
#include "shapederiv/shape_derivative.hpp"

#include <doctest.h>

#include <cmath>

using namespace shapederiv;
using namespace shapederiv::shape;
using flow::VelocityField;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

namespace {

const std::vector<double> kSteps{1e-2, 3e-3, 1e-3};

mesh::TriMesh square(int n, std::initializer_list<const char*> neumann = {"right"}) {
    std::vector<std::string> names(neumann.begin(), neumann.end());
    return mesh::unit_square_mesh(n, mesh::NeumannSides::parse(names));
}

VelocityField sample_affine() {
    Mat2 M;
    M << 0.3, 0.1, -0.2, 0.4;
    return VelocityField::affine(M, Vec2(0.05, -0.02));
}

Eigen::Matrix<double, 2, 6> sample_coefficients() {
    Eigen::Matrix<double, 2, 6> c;
    c << 0.1, 0.3, -0.2, 0.5, 0.4, -0.1,
        -0.2, 0.1, 0.2, -0.3, 0.2, 0.6;
    return c;
}

double max_abs(const stokes::SparseMatrix& m) { return Eigen::MatrixXd(m).cwiseAbs().maxCoeff(); }

struct Base {
    stokes::StokesSystem sys;
    stokes::StokesSolution sol;
};

Base solve(const mesh::TriMesh& m, const fields::VectorField& force,
           stokes::PressureMode mode = stokes::PressureMode::Mixed) {
    auto sys = stokes::assemble(m, force);
    auto sol = stokes::solve_stokes(sys, mode);
    return {std::move(sys), std::move(sol)};
}

DerivativeReport derivative(const Base& base, const VelocityField& field, const fields::VectorField& force) {
    const auto forms = assemble_perturbation(base.sys.space, field, force);
    return stokes_shape_derivative(base.sys, base.sol, forms, field);
}

}  // namespace

TEST_CASE("perturbation forms: algebraic examples") {
    const auto trig = fields::trigonometric_solution().force;
    const stokes::FunctionSpace space(square(4));

    SUBCASE("zero field") {
        const auto forms = assemble_perturbation(space, VelocityField::zero(), trig);
        CHECK(forms.A1.norm() == 0.0);
        CHECK(forms.B1.norm() == 0.0);
        CHECK(forms.f1.norm() == 0.0);
    }
    SUBCASE("constant field with constant force") {
        const auto forms =
            assemble_perturbation(space, VelocityField::constant(Vec2(0.3, -0.7)), fields::constant_force(Vec2(1, 2)));
        CHECK(forms.A1.norm() == 0.0);
        CHECK(forms.B1.norm() == 0.0);
        CHECK(forms.f1.norm() == 0.0);
    }
    SUBCASE("identity field: A1 vanishes and B1 reproduces B") {
        const auto sys = stokes::assemble(square(4), trig);
        const auto forms = assemble_perturbation(sys.space, VelocityField::affine(Mat2::Identity(), Vec2::Zero()), trig);
        CHECK(max_abs(forms.A1) <= 1e-14 * max_abs(sys.A));
        CHECK(max_abs(forms.B1 - sys.B) <= 1e-14 * max_abs(sys.B));
    }
    SUBCASE("A1 is symmetric") {
        const auto forms = assemble_perturbation(space, VelocityField::quadratic(sample_coefficients()), trig);
        CHECK(max_abs(forms.A1 - stokes::SparseMatrix(forms.A1.transpose())) <= 1e-14 * max_abs(forms.A1));
        CHECK(forms.A1.rows() == space.num_velocity_dofs());
        CHECK(forms.B1.rows() == space.num_pressure_dofs());
    }
}

TEST_CASE("perturbation forms equal derivatives of the assembled operators along an affine flow") {
    // For affine Λ the transported mesh is the exact image φ_s(Ω) and keeps the
    // dof numbering, so (X(s) − X(−s))/(2s) → X¹ for X ∈ {A, B, f}.
    const auto trig = fields::trigonometric_solution().force;
    const auto base = square(4, {"right", "top"});
    const auto field = sample_affine();
    const double s = 1e-4;
    const auto plus = stokes::assemble(mesh::transport_mesh(base, field, s), trig);
    const auto minus = stokes::assemble(mesh::transport_mesh(base, field, -s), trig);
    const auto forms = assemble_perturbation(stokes::FunctionSpace(base), field, trig);

    const Eigen::MatrixXd dA = (Eigen::MatrixXd(plus.A) - Eigen::MatrixXd(minus.A)) / (2 * s);
    const Eigen::MatrixXd dB = (Eigen::MatrixXd(plus.B) - Eigen::MatrixXd(minus.B)) / (2 * s);
    const Eigen::VectorXd df = (plus.f - minus.f) / (2 * s);
    CHECK((dA - Eigen::MatrixXd(forms.A1)).cwiseAbs().maxCoeff() <= 1e-6 * (1 + dA.cwiseAbs().maxCoeff()));
    CHECK((dB - Eigen::MatrixXd(forms.B1)).cwiseAbs().maxCoeff() <= 1e-6 * (1 + dB.cwiseAbs().maxCoeff()));
    CHECK((df - forms.f1).lpNorm<Eigen::Infinity>() <= 1e-6 * (1 + df.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("shape derivative: trivial cases") {
    const auto trig = fields::trigonometric_solution().force;
    const auto base = solve(square(6), trig);

    SUBCASE("zero field") {
        const auto report = derivative(base, VelocityField::zero(), trig);
        CHECK(report.L1 == 0.0);
        CHECK(report.E1 == 0.0);
        CHECK(report.dual_term == 0.0);
    }
    SUBCASE("u = 0 in the pressure-gradient case") {
        const auto exact = fields::pressure_gradient_solution();
        const auto pg = solve(square(6), exact.force);
        const flow::SupportWindow window{Vec2(0.3, 0.3), Vec2(0.6, 0.6), 0.2};
        const VelocityField field(flow::RotationVelocity{1.0}, window);
        const auto report = derivative(pg, field, exact.force);
        CHECK(std::abs(report.L1) <= 1e-12);
    }
    SUBCASE("translations with constant force") {
        const auto force = fields::constant_force(Vec2(0.5, -1.0));
        const auto constant = solve(square(6, {"right", "top"}), force);
        const auto report = derivative(constant, VelocityField::constant(Vec2(0.2, 0.1)), force);
        CHECK(std::abs(report.L1) <= 1e-10 * (1 + std::abs(stokes::energy(constant.sys, constant.sol))));
    }
}

TEST_CASE("shape derivative: decomposition and quadrature paths") {
    const auto trig = fields::trigonometric_solution().force;
    const auto base = solve(square(8, {"right", "top"}), trig);
    for (const auto& field : {sample_affine(), VelocityField::quadratic(sample_coefficients())}) {
        const auto forms = assemble_perturbation(base.sys.space, field, trig);
        const auto report = stokes_shape_derivative(base.sys, base.sol, forms, field);
        CHECK(report.L1 == report.E1 + report.dual_term);
        CHECK(report.E1 == 0.5 * base.sol.u.dot(forms.A1 * base.sol.u) - forms.f1.dot(base.sol.u));

        const double via_matrix = base.sol.lambda.dot(forms.B1_transport * base.sol.u);
        CHECK(std::abs(report.dual_term - via_matrix) <= 1e-10 * (1 + std::abs(via_matrix)));

        if (std::holds_alternative<flow::QuadraticVelocity>(field.kind())) continue;
        // With div Λ constant, λ div Λ is a discrete pressure, so the
        // (div Λ)(div u) part is annihilated by the discrete incompressibility.
        const stokes::SparseMatrix div_part = forms.B1 + forms.B1_transport;
        double div_scale = 0.0;
        for (const auto& v : base.sys.space.mesh().vertices) div_scale = std::max(div_scale, std::abs(field.divergence(v)));
        CHECK(std::abs(base.sol.lambda.dot(div_part * base.sol.u)) <= 1e-8 * base.sol.lambda.norm() * (1 + div_scale));
        CHECK((base.sys.B * base.sol.u).norm() <= 1e-9);
    }
}

TEST_CASE("shape derivative is linear in the velocity field") {
    const auto trig = fields::trigonometric_solution().force;
    const auto base = solve(square(8), trig);
    const auto a = sample_affine();
    const auto q = VelocityField::quadratic(sample_coefficients());
    const auto r = VelocityField::rotation(0.7);
    const double la = derivative(base, a, trig).L1;
    const double lq = derivative(base, q, trig).L1;
    const double lr = derivative(base, r, trig).L1;
    CHECK(derivative(base, a.plus(q), trig).L1 == doctest::Approx(la + lq).epsilon(1e-10));
    CHECK(derivative(base, q.plus(r), trig).L1 == doctest::Approx(lq + lr).epsilon(1e-10));
    CHECK(derivative(base, a.negated(), trig).L1 == doctest::Approx(-la).epsilon(1e-12));
}

TEST_CASE("shape derivative: error reporting") {
    const auto trig = fields::trigonometric_solution().force;
    const auto base = solve(square(4), trig);
    const auto forms = assemble_perturbation(base.sys.space, sample_affine(), trig);
    auto broken = base.sol;
    broken.u *= 1.01;
    try {
        stokes_shape_derivative(base.sys, broken, forms, sample_affine());
        FAIL("expected UnsolvedSolution");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsolvedSolution);
    }
    const auto other = assemble_perturbation(stokes::FunctionSpace(square(5)), sample_affine(), trig);
    try {
        stokes_shape_derivative(base.sys, base.sol, other, sample_affine());
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("finite differences: zero field and frozen Neumann boundary") {
    SUBCASE("zero field") {
        const StokesProblem problem{square(4), fields::trigonometric_solution().force};
        const auto report = fd_verify(problem, VelocityField::zero(), kSteps);
        for (const auto& row : report.fd_table) {
            CHECK(row.fd == 0.0);
            CHECK(row.abs_err == 0.0);
        }
        CHECK(report.slope.describe() == "exact (all errors 0)");
    }
    SUBCASE("pressure-gradient case with a localized field") {
        // The window keeps Λ away from the Neumann side, so u stays 0 on every perturbed domain.
        const auto exact = fields::pressure_gradient_solution();
        const StokesProblem problem{square(8), exact.force};
        const VelocityField field(flow::RotationVelocity{1.0}, flow::SupportWindow{Vec2(0.35, 0.35), Vec2(0.65, 0.65), 0.2});
        const auto report = fd_verify(problem, field, kSteps);
        CHECK(std::abs(report.L1) <= 1e-12);
        for (const auto& row : report.fd_table) CHECK(std::abs(row.fd) <= 1e-10);
        CHECK(report.slope.exact);
    }
}

TEST_CASE("finite differences: affine field on the mixed square") {
    const auto trig = fields::trigonometric_solution().force;
    std::vector<double> l1;
    for (int n : {8, 16}) {
        const StokesProblem problem{square(n), trig};
        const auto report = fd_verify(problem, sample_affine(), kSteps);
        REQUIRE(report.fd_table.size() == kSteps.size());
        CHECK(!report.slope.exact);
        CHECK(report.slope.slope >= 1.8);
        CHECK(report.forward_slope.slope >= 0.9);
        CHECK(report.fd_table.back().abs_err <= 1e-3 * std::abs(report.L1));
        l1.push_back(report.L1);
    }
    CHECK(std::abs(l1[0] - l1[1]) <= 0.05 * std::abs(l1[1]));
}

TEST_CASE("finite differences: quadratic field") {
    // Straight-edged transport realizes the piecewise-linear interpolant of the
    // flow, so central differences converge to the derivative along that
    // interpolant. The gap to L1 is a discretization error that must vanish
    // under refinement.
    const auto trig = fields::trigonometric_solution().force;
    const auto field = VelocityField::quadratic(sample_coefficients());
    std::vector<double> gaps;
    for (int n : {8, 16, 32}) {
        const StokesProblem problem{square(n), trig};
        const auto report = fd_verify(problem, field, {1e-3});
        gaps.push_back(report.fd_table.front().abs_err);
        CHECK(report.fd_table.front().abs_err <= 1e-3 * std::abs(report.L1));
    }
    CHECK(std::log2(gaps[0] / gaps[1]) >= 1.5);
    CHECK(std::log2(gaps[1] / gaps[2]) >= 1.5);
}

TEST_CASE("rotations of the disk") {
    const std::vector<double> steps = kSteps;
    SUBCASE("rotation-equivariant force") {
        const auto report = corollary3_check(4, fields::rotational_force(1.0), 1.0, steps);
        const double scale = 1.0 + std::abs(report.energy);
        CHECK(std::abs(report.L1) <= 1e-8 * scale);
        for (const auto& row : report.fd_table) CHECK(std::abs(row.fd) <= 1e-8 * scale);
    }
    SUBCASE("generic force converges at second order") {
        const auto report = corollary3_check(4, fields::trigonometric_solution().force, 1.0, steps);
        CHECK(!report.slope.exact);
        CHECK(report.slope.slope >= 1.8);
    }
    SUBCASE("constant force is a pressure gradient") {
        // f = ∇x₁ is balanced by the pressure, u = 0 and the energy is 0 on every disk.
        const auto report = corollary3_check(4, fields::constant_force(Vec2(1.0, 0.0)), 1.0, steps);
        CHECK(std::abs(report.L1) <= 1e-12);
        CHECK(report.slope.exact);
    }
    SUBCASE("zero angular velocity") {
        const auto report = corollary3_check(3, fields::trigonometric_solution().force, 0.0, steps);
        CHECK(report.L1 == 0.0);
        for (const auto& row : report.fd_table) CHECK(row.fd == 0.0);
    }
    SUBCASE("dropping divergence terms is harmless for rotations") {
        const auto trig = fields::trigonometric_solution().force;
        const stokes::FunctionSpace space(mesh::disk_mesh(3));
        const auto rot = VelocityField::rotation(1.0);
        const auto full = assemble_perturbation(space, rot, trig);
        const auto dropped = assemble_perturbation(space, rot, trig, {true});
        CHECK(max_abs(full.A1 - dropped.A1) == 0.0);
        CHECK((full.f1 - dropped.f1).norm() == 0.0);
    }
}
