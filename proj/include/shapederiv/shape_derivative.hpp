#pragma once

#include "shapederiv/fields.hpp"
#include "shapederiv/flow.hpp"
#include "shapederiv/mesh.hpp"
#include "shapederiv/slope.hpp"
#include "shapederiv/stokes_fem.hpp"

#include <optional>
#include <vector>

namespace shapederiv::shape {

/// First-order terms of the Stokes operators pulled back along the flow of Λ:
///   ⟨A¹u, w⟩ = ∫ Σᵢ ∇uᵢᵀ((div Λ)I − ∇Λ − ∇Λᵀ)∇wᵢ
///   (λ, B¹u) = ∫ λ((div Λ)(div u) − Σᵢⱼ Λⱼ,ᵢ uᵢ,ⱼ)
///   ⟨f¹, u⟩ = ∫ Σᵢ((div Λ)fᵢ + Λᵀ∇fᵢ)uᵢ
struct PerturbationForms {
    stokes::SparseMatrix A1;
    stokes::SparseMatrix B1;
    /// The Σᵢⱼ Λⱼ,ᵢ uᵢ,ⱼ pairing alone, so that B1 = (div Λ)(div u) part − B1_transport.
    stokes::SparseMatrix B1_transport;
    Eigen::VectorXd f1;
};

struct FormOptions {
    /// Evaluate with div Λ replaced by 0 (area-preserving flows).
    bool drop_divergence_terms = false;
};

PerturbationForms assemble_perturbation(const stokes::FunctionSpace& space, const flow::VelocityField& field,
                                        const fields::VectorField& force, FormOptions options = {});

struct FdTableRow {
    double s = 0.0;
    double fd = 0.0;       ///< (E(s) − E(−s)) / (2s)
    double abs_err = 0.0;  ///< |fd − L1|
    double forward = 0.0;  ///< (E(s) − E(0)) / s
    double forward_err = 0.0;
};

struct DerivativeReport {
    double L1 = 0.0;
    double E1 = 0.0;         ///< ½uᵀA¹u − f¹ᵀu
    double dual_term = 0.0;  ///< ∫ λ Σᵢⱼ Λⱼ,ᵢ uᵢ,ⱼ by direct quadrature
    double energy = 0.0;     ///< E at s = 0
    std::vector<FdTableRow> fd_table;
    SlopeFit slope;          ///< of |fd − L1| against s
    SlopeFit forward_slope;  ///< of the one-sided quotient error
};

/// Shape derivative L¹ = E¹ + ∫ λ Σᵢⱼ Λⱼ,ᵢ uᵢ,ⱼ at a solved Stokes pair.
/// Throws UnsolvedSolution when the residuals exceed tolerance.
DerivativeReport stokes_shape_derivative(const stokes::StokesSystem& sys, const stokes::StokesSolution& sol,
                                         const PerturbationForms& forms, const flow::VelocityField& field);

/// Direct quadrature of ∫ λ_h Σᵢⱼ Λⱼ,ᵢ (u_h)ᵢ,ⱼ.
double dual_term_quadrature(const stokes::StokesSystem& sys, const stokes::StokesSolution& sol,
                            const flow::VelocityField& field);

/// Problem definition shared by the base and perturbed solves.
struct StokesProblem {
    mesh::TriMesh mesh;
    fields::VectorField force;
    stokes::PressureMode pressure_mode = stokes::PressureMode::Mixed;
    bool drop_divergence_terms = false;
    int flow_steps = flow::kDefaultSteps;
};

/// Energy of the problem posed on the mesh transported by φ_s.
double transported_energy(const StokesProblem& problem, const flow::VelocityField& field, double s);

/// L¹ on the base mesh and central-difference quotients of the energy over
/// meshes transported by ±s for every s in s_list (the ± solves run
/// concurrently; rows stay in s_list order).
DerivativeReport fd_verify(const StokesProblem& problem, const flow::VelocityField& field,
                           const std::vector<double>& s_list);

/// Pure-Dirichlet disk problem under the rotation ω(−x₂, x₁) with pinned
/// pressure; divergence terms of the derivative formula are dropped.
DerivativeReport corollary3_check(int rings, const fields::VectorField& force, double omega,
                                  const std::vector<double>& s_list);

}  // namespace shapederiv::shape
