#include "shapederiv/error.hpp"
#include "shapederiv/stokes_fem.hpp"

#include <doctest.h>

#include <cmath>

using namespace shapederiv;
using namespace shapederiv::stokes;

namespace {

mesh::NeumannSides sides(std::initializer_list<const char*> names) {
    std::vector<std::string> v(names.begin(), names.end());
    return mesh::NeumannSides::parse(v);
}

/// Integral of the P2 basis function of local node k over a triangle by the
/// centroid rule on 4^levels congruent subtriangles (barycentric formulas).
double midpoint_basis_integral(double area, int k, int levels) {
    const int m = 1 << levels;
    const double sub = area / (m * m);
    auto basis = [k](double l0, double l1, double l2) {
        const double l[3] = {l0, l1, l2};
        if (k < 3) return l[k] * (2 * l[k] - 1);
        const int a = k - 3;
        return 4 * l[a] * l[(a + 1) % 3];
    };
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; i + j < m; ++j) {
            // upright subtriangle
            sum += basis((i + 1.0 / 3) / m, (j + 1.0 / 3) / m, 1 - (i + j + 2.0 / 3) / m);
            if (i + j < m - 1) sum += basis((i + 2.0 / 3) / m, (j + 2.0 / 3) / m, 1 - (i + j + 4.0 / 3) / m);
        }
    }
    return sum * sub;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::ConfigError;
}

}  // namespace

TEST_CASE("assembly: zero load and degenerate spaces") {
    const auto sys = assemble(mesh::unit_square_mesh(1), fields::zero_force());
    CHECK(sys.f.norm() == 0.0);

    mesh::TriMesh tri;
    tri.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    tri.triangles = {{0, 1, 2}};
    tri.boundary_edges = {{0, 1, mesh::BoundaryTag::Dirichlet}, {1, 2, mesh::BoundaryTag::Dirichlet},
                          {2, 0, mesh::BoundaryTag::Dirichlet}};
    const FunctionSpace space(tri);
    CHECK(space.num_velocity_dofs() == 0);
    CHECK(space.num_pressure_dofs() == 3);
}

TEST_CASE("assembly: load vector matches a refined midpoint rule") {
    const auto m = mesh::unit_square_mesh(4, sides({"right"}));
    const auto sys = assemble(m, fields::constant_force(Vec2(1.0, 0.0)));
    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(sys.f.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& nodes = sys.space.element_nodes(t);
        for (int k = 0; k < 6; ++k) {
            const int dof = sys.space.velocity_dof(nodes[static_cast<std::size_t>(k)], 0);
            if (dof >= 0) oracle(dof) += midpoint_basis_integral(m.signed_area(t), k, 4);
            const int other = sys.space.velocity_dof(nodes[static_cast<std::size_t>(k)], 1);
            if (other >= 0) CHECK(sys.f(other) == 0.0);
        }
    }
    CHECK((sys.f - oracle).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("assembly: structural properties") {
    const auto sys = assemble(mesh::unit_square_mesh(5, sides({"right", "top"})), fields::trigonometric_solution().force);
    const Eigen::MatrixXd A(sys.A);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * A.cwiseAbs().maxCoeff());
    CHECK(Eigen::LLT<Eigen::MatrixXd>(A).info() == Eigen::Success);
    CHECK(sys.B.rows() == sys.space.num_pressure_dofs());
    CHECK(sys.B.cols() == sys.space.num_velocity_dofs());
}

TEST_CASE("assembly: every boundary edge Neumann is rejected") {
    CHECK(kind_of([] { assemble(mesh::unit_square_mesh(2, sides({"left", "right", "top", "bottom"})), fields::zero_force()); }) ==
          ErrorKind::EmptyDirichletBoundary);
}

TEST_CASE("B integrates the divergence") {
    // (x₁x₂, 0) vanishes on the Dirichlet bottom side and has div = x₂, so
    // the pressure rows of B sum to ∫ x₂ = 1/2.
    const auto m = mesh::unit_square_mesh(3, sides({"left", "right", "top"}));
    const auto sys = assemble(m, fields::zero_force());
    const Eigen::VectorXd u = sys.space.interpolate_velocity([](const Vec2& x) { return Vec2(x.x() * x.y(), 0.0); });
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.space.num_pressure_dofs());
    CHECK(ones.dot(sys.B * u) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("solve: zero data gives the zero solution") {
    const auto sys = assemble(mesh::unit_square_mesh(3, sides({"right"})), fields::zero_force());
    const auto sol = solve_stokes(sys);
    CHECK(sol.u.norm() == 0.0);
    CHECK(sol.lambda.norm() == 0.0);
    CHECK(energy(sys, sol) == 0.0);
}

TEST_CASE("solve: pressure-gradient case is reproduced exactly") {
    const auto exact = fields::pressure_gradient_solution();
    for (int n : {2, 4, 8}) {
        const auto sys = assemble(mesh::unit_square_mesh(n, sides({"right"})), exact.force);
        const auto sol = solve_stokes(sys);
        CHECK(sol.u.lpNorm<Eigen::Infinity>() <= 1e-9);
        const auto err = nodal_errors(sys, sol, exact);
        CHECK(err.pressure_max <= 1e-9);
        CHECK(std::abs(energy(sys, sol)) <= 1e-12);
    }
}

TEST_CASE("solve: Poiseuille flow with traction is reproduced exactly") {
    const auto exact = fields::poiseuille_solution();
    for (int n : {2, 4, 8}) {
        const auto sys = assemble(mesh::unit_square_mesh(n, sides({"left", "right"})), exact.force, exact.traction());
        const auto sol = solve_stokes(sys);
        const auto err = nodal_errors(sys, sol, exact);
        CHECK(err.velocity_max <= 1e-8);
        CHECK(err.pressure_max <= 1e-8);
        CHECK((sol.u - sys.space.interpolate_velocity(exact.velocity)).lpNorm<Eigen::Infinity>() <= 1e-8);
        // ½∫|∇u|² = 1/6 and the traction (2, 0) on the inflow edge does work 1/3.
        CHECK(energy(sys, sol) == doctest::Approx(-1.0 / 6.0).epsilon(1e-10));
        CHECK(velocity_h1_error(sys, sol, exact) <= 1e-8);
    }
}

TEST_CASE("solve: orthogonality and energy identity") {
    const auto exact = fields::trigonometric_solution();
    for (int n : {3, 6}) {
        const auto sys = assemble(mesh::unit_square_mesh(n, sides({"right"})), exact.force);
        const auto sol = solve_stokes(sys);
        CHECK(is_solved(sys, sol));
        CHECK(std::abs(sol.lambda.dot(sys.B * sol.u)) <= 1e-10);
        const Eigen::VectorXd load = sys.f + sys.g;
        CHECK(std::abs(sol.u.dot(sys.A * sol.u) - load.dot(sol.u)) <= 1e-9 * (1.0 + load.norm() * sol.u.norm()));
    }
}

TEST_CASE("solve: pinned mode on a pure Dirichlet square") {
    const auto exact = fields::trigonometric_solution();
    std::vector<double> pressure_errors;
    for (int n : {8, 16}) {
        const auto sys = assemble(mesh::unit_square_mesh(n), exact.force);
        const auto sol = solve_stokes(sys, PressureMode::Pinned);
        CHECK(is_solved(sys, sol));
        const Eigen::VectorXd weights = pressure_mass(sys.space.mesh()) * Eigen::VectorXd::Ones(sol.lambda.size());
        CHECK(std::abs(weights.dot(sol.lambda)) <= 1e-12);
        // cos(πx₁)cos(πx₂) already has zero mean, so nodal values compare directly.
        pressure_errors.push_back(nodal_errors(sys, sol, exact).pressure_max);
    }
    CHECK(pressure_errors[1] <= 0.25 * pressure_errors[0]);
}

TEST_CASE("energy: dimension checks") {
    const auto sys = assemble(mesh::unit_square_mesh(2, sides({"right"})), fields::zero_force());
    StokesSolution bogus{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(9), 0.0, 0.0};
    CHECK(kind_of([&] { energy(sys, bogus); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("manufactured trigonometric data satisfy the Stokes equations") {
    const auto exact = fields::trigonometric_solution();
    const double h = 1e-4;
    for (const Vec2& x : {Vec2(0.2, 0.7), Vec2(0.55, 0.35), Vec2(0.9, 0.1)}) {
        Vec2 laplacian = Vec2::Zero();
        Vec2 grad_p;
        for (int j = 0; j < 2; ++j) {
            const Vec2 e = h * Vec2::Unit(j);
            laplacian += (exact.velocity(x + e) - 2 * exact.velocity(x) + exact.velocity(x - e)) / (h * h);
            grad_p(j) = (exact.pressure(x + e) - exact.pressure(x - e)) / (2 * h);
            const Vec2 du = (exact.velocity(x + e) - exact.velocity(x - e)) / (2 * h);
            CHECK((du - exact.velocity_gradient(x).col(j)).norm() <= 1e-6);
            const Vec2 df = (exact.force.value(x + e) - exact.force.value(x - e)) / (2 * h);
            CHECK((df - exact.force.gradient(x).col(j)).norm() <= 1e-5 * (1 + df.norm()));
        }
        CHECK((exact.force.value(x) - (-laplacian + grad_p)).norm() <= 1e-4);
        CHECK(std::abs(exact.velocity_gradient(x).trace()) <= 1e-12);
    }
    for (double t : {0.0, 0.3, 1.0}) {
        CHECK(exact.velocity(Vec2(t, 0.0)).norm() <= 1e-15);
        CHECK(exact.velocity(Vec2(1.0, t)).norm() <= 1e-14);
    }
}

TEST_CASE("convergence study") {
    SUBCASE("Poiseuille is exact on every mesh") {
        const auto rows = convergence_study(fields::poiseuille_solution(), {2, 4, 8}, sides({"left", "right"}));
        for (const auto& row : rows) CHECK(row.h1_error <= 1e-8);
    }
    SUBCASE("trigonometric solution converges at second order in H1") {
        const auto rows = convergence_study(fields::trigonometric_solution(), {4, 8, 16}, sides({"right"}));
        REQUIRE(rows.size() == 3);
        CHECK(!rows[0].order.has_value());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            REQUIRE(rows[i].order.has_value());
            CHECK(*rows[i].order >= 1.8);
        }
    }
    SUBCASE("single row reports no order") {
        const auto rows = convergence_study(fields::trigonometric_solution(), {4}, sides({"right"}));
        REQUIRE(rows.size() == 1);
        CHECK(!rows[0].order.has_value());
    }
}

TEST_CASE("discrete inf-sup constant stays bounded away from zero") {
    std::vector<double> beta;
    for (int n : {4, 8, 16}) {
        beta.push_back(inf_sup_constant(assemble(mesh::unit_square_mesh(n, sides({"right"})), fields::zero_force())));
    }
    CHECK(beta[0] > 0.0);
    CHECK(beta[1] >= 0.8 * beta[0]);
    CHECK(beta[2] >= 0.8 * beta[0]);
    MESSAGE("inf-sup constants: " << beta[0] << ", " << beta[1] << ", " << beta[2]);
}
