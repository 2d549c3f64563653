#include "shapederiv/shape_derivative.hpp"

#include "shapederiv/error.hpp"

#include <cmath>
#include <future>

namespace shapederiv::shape {

using stokes::ElementPoint;
using stokes::Mat2;
using stokes::Vec2;
using Triplet = Eigen::Triplet<double>;

PerturbationForms assemble_perturbation(const stokes::FunctionSpace& space, const flow::VelocityField& field,
                                        const fields::VectorField& force, FormOptions options) {
    const int nu = space.num_velocity_dofs();
    const int np = space.num_pressure_dofs();
    const auto& m = space.mesh();
    std::vector<Triplet> a1;
    std::vector<Triplet> b1;
    std::vector<Triplet> b1_transport;
    PerturbationForms forms;
    forms.f1 = Eigen::VectorXd::Zero(nu);

    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& nodes = space.element_nodes(t);
        const auto& tri = m.triangles[t];
        Eigen::Matrix<double, 6, 6> stiff = Eigen::Matrix<double, 6, 6>::Zero();
        std::array<std::array<Vec2, 6>, 3> div_part{};
        std::array<std::array<Vec2, 6>, 3> transport_part{};
        std::array<Vec2, 6> load{};
        for (auto& row : div_part) row.fill(Vec2::Zero());
        for (auto& row : transport_part) row.fill(Vec2::Zero());
        load.fill(Vec2::Zero());

        for (const ElementPoint& pt : stokes::element_quadrature(m, t)) {
            const Mat2 grad_lambda = field.jacobian(pt.x);
            const double div_lambda = options.drop_divergence_terms ? 0.0 : grad_lambda.trace();
            const Vec2 lambda = field.evaluate(pt.x);
            const Mat2 kernel = div_lambda * Mat2::Identity() - grad_lambda - grad_lambda.transpose();
            const Vec2 f1 = div_lambda * force.value(pt.x) + force.gradient(pt.x) * lambda;
            for (std::size_t a = 0; a < 6; ++a) {
                const Vec2 k_grad = kernel * pt.grad_phi[a];
                for (std::size_t b = 0; b < 6; ++b) {
                    stiff(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) +=
                        pt.weight * pt.grad_phi[b].dot(k_grad);
                }
                load[a] += pt.weight * pt.phi[a] * f1;
                // Σⱼ Λⱼ,c ∂ⱼφ for the vector basis φ e_c
                const Vec2 transport = grad_lambda.transpose() * pt.grad_phi[a];
                for (std::size_t k = 0; k < 3; ++k) {
                    div_part[k][a] += pt.weight * pt.psi[k] * div_lambda * pt.grad_phi[a];
                    transport_part[k][a] += pt.weight * pt.psi[k] * transport;
                }
            }
        }
        for (std::size_t a = 0; a < 6; ++a) {
            for (int c = 0; c < 2; ++c) {
                const int da = space.velocity_dof(nodes[a], c);
                if (da < 0) continue;
                forms.f1(da) += load[a](c);
                for (std::size_t b = 0; b < 6; ++b) {
                    const int db = space.velocity_dof(nodes[b], c);
                    if (db >= 0) a1.emplace_back(da, db, stiff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    b1.emplace_back(tri[k], da, div_part[k][a](c) - transport_part[k][a](c));
                    b1_transport.emplace_back(tri[k], da, transport_part[k][a](c));
                }
            }
        }
    }
    forms.A1.resize(nu, nu);
    forms.A1.setFromTriplets(a1.begin(), a1.end());
    forms.B1.resize(np, nu);
    forms.B1.setFromTriplets(b1.begin(), b1.end());
    forms.B1_transport.resize(np, nu);
    forms.B1_transport.setFromTriplets(b1_transport.begin(), b1_transport.end());
    return forms;
}

double dual_term_quadrature(const stokes::StokesSystem& sys, const stokes::StokesSolution& sol,
                            const flow::VelocityField& field) {
    const auto nodal = sys.space.expand_velocity(sol.u);
    const auto& m = sys.space.mesh();
    double sum = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& nodes = sys.space.element_nodes(t);
        const auto& tri = m.triangles[t];
        for (const ElementPoint& pt : stokes::element_quadrature(m, t)) {
            Mat2 grad_u = Mat2::Zero();
            for (std::size_t a = 0; a < 6; ++a) grad_u += nodal[static_cast<std::size_t>(nodes[a])] * pt.grad_phi[a].transpose();
            double pressure = 0.0;
            for (std::size_t k = 0; k < 3; ++k) pressure += sol.lambda(tri[k]) * pt.psi[k];
            // Σᵢⱼ Λⱼ,ᵢ uᵢ,ⱼ = trace(∇Λ ∇u)
            sum += pt.weight * pressure * (field.jacobian(pt.x) * grad_u).trace();
        }
    }
    return sum;
}

DerivativeReport stokes_shape_derivative(const stokes::StokesSystem& sys, const stokes::StokesSolution& sol,
                                         const PerturbationForms& forms, const flow::VelocityField& field) {
    if (forms.A1.rows() != sys.A.rows() || forms.f1.size() != sys.f.size() || forms.B1.rows() != sys.B.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "perturbation forms do not match the Stokes system");
    }
    if (!stokes::is_solved(sys, sol)) {
        throw Error(ErrorKind::UnsolvedSolution, "Stokes residuals exceed tolerance");
    }
    DerivativeReport report;
    report.E1 = 0.5 * sol.u.dot(forms.A1 * sol.u) - forms.f1.dot(sol.u);
    report.dual_term = dual_term_quadrature(sys, sol, field);
    report.L1 = report.E1 + report.dual_term;
    report.energy = stokes::energy(sys, sol);
    return report;
}

double transported_energy(const StokesProblem& problem, const flow::VelocityField& field, double s) {
    const mesh::TriMesh moved = mesh::transport_mesh(problem.mesh, field, s, problem.flow_steps);
    const stokes::StokesSystem sys = stokes::assemble(moved, problem.force);
    const stokes::StokesSolution sol = stokes::solve_stokes(sys, problem.pressure_mode);
    if (!stokes::is_solved(sys, sol)) {
        throw Error(ErrorKind::UnsolvedSolution, "perturbed Stokes solve did not reach tolerance");
    }
    return stokes::energy(sys, sol);
}

DerivativeReport fd_verify(const StokesProblem& problem, const flow::VelocityField& field,
                           const std::vector<double>& s_list) {
    const stokes::StokesSystem sys = stokes::assemble(problem.mesh, problem.force);
    const stokes::StokesSolution sol = stokes::solve_stokes(sys, problem.pressure_mode);
    const PerturbationForms forms =
        assemble_perturbation(sys.space, field, problem.force, {problem.drop_divergence_terms});
    DerivativeReport report = stokes_shape_derivative(sys, sol, forms, field);

    std::vector<double> errors;
    std::vector<double> forward_errors;
    for (double s : s_list) {
        auto plus = std::async(std::launch::async, transported_energy, std::cref(problem), std::cref(field), s);
        auto minus = std::async(std::launch::async, transported_energy, std::cref(problem), std::cref(field), -s);
        const double e_plus = plus.get();
        const double e_minus = minus.get();
        FdTableRow row;
        row.s = s;
        row.fd = (e_plus - e_minus) / (2.0 * s);
        row.abs_err = std::abs(row.fd - report.L1);
        row.forward = (e_plus - report.energy) / s;
        row.forward_err = std::abs(row.forward - report.L1);
        report.fd_table.push_back(row);
        errors.push_back(row.abs_err);
        forward_errors.push_back(row.forward_err);
    }
    const double exact_threshold = 1e-11 * (1.0 + std::abs(report.L1) + std::abs(report.energy));
    report.slope = loglog_slope(s_list, errors, exact_threshold);
    report.forward_slope = loglog_slope(s_list, forward_errors, exact_threshold);
    return report;
}

DerivativeReport corollary3_check(int rings, const fields::VectorField& force, double omega,
                                  const std::vector<double>& s_list) {
    StokesProblem problem{mesh::disk_mesh(rings), force, stokes::PressureMode::Pinned, true};
    return fd_verify(problem, flow::VelocityField::rotation(omega), s_list);
}

}  // namespace shapederiv::shape
