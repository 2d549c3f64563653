#pragma once

#include "shapederiv/fields.hpp"
#include "shapederiv/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <optional>
#include <vector>

namespace shapederiv::stokes {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Taylor-Hood P2/P1 spaces on a mesh. Velocity nodes are the mesh vertices
/// followed by the edge midpoints; components at nodes on the closure of the
/// Dirichlet boundary are eliminated. Pressure lives on the vertices.
class FunctionSpace {
public:
    explicit FunctionSpace(mesh::TriMesh mesh);

    [[nodiscard]] const mesh::TriMesh& mesh() const { return mesh_; }
    [[nodiscard]] int num_nodes() const { return static_cast<int>(node_pos_.size()); }
    [[nodiscard]] const Vec2& node_position(int node) const { return node_pos_[static_cast<std::size_t>(node)]; }
    /// Vertices 0..2 of triangle t, then midpoints of edges (0,1), (1,2), (2,0).
    [[nodiscard]] const std::array<int, 6>& element_nodes(std::size_t t) const { return element_nodes_[t]; }
    /// Midpoint node of the edge between two vertices.
    [[nodiscard]] int edge_node(int a, int b) const;
    [[nodiscard]] bool is_dirichlet(int node) const { return dirichlet_[static_cast<std::size_t>(node)] != 0; }
    /// Free velocity dof of (node, component), or −1 when constrained.
    [[nodiscard]] int velocity_dof(int node, int component) const {
        return dof_[static_cast<std::size_t>(2 * node + component)];
    }
    [[nodiscard]] int num_velocity_dofs() const { return num_velocity_dofs_; }
    [[nodiscard]] int num_pressure_dofs() const { return static_cast<int>(mesh_.vertices.size()); }

    /// Per-node velocity vectors (zero at constrained components).
    [[nodiscard]] std::vector<Vec2> expand_velocity(const Eigen::VectorXd& u) const;
    /// Free dof vector from nodal values of a velocity field.
    [[nodiscard]] Eigen::VectorXd interpolate_velocity(const std::function<Vec2(const Vec2&)>& velocity) const;

private:
    mesh::TriMesh mesh_;
    std::vector<Vec2> node_pos_;
    std::vector<std::array<int, 6>> element_nodes_;
    std::vector<std::pair<std::pair<int, int>, int>> edge_nodes_;  // sorted by vertex pair
    std::vector<char> dirichlet_;
    std::vector<int> dof_;
    int num_velocity_dofs_ = 0;
};

/// Quadrature point data on one triangle: P2 velocity basis, P1 pressure
/// basis and their physical gradients.
struct ElementPoint {
    Vec2 x;
    double weight = 0.0;  ///< includes the element area
    std::array<double, 6> phi{};
    std::array<Vec2, 6> grad_phi{};
    std::array<double, 3> psi{};
};

/// Degree-4 rule (6 points) mapped to triangle t of the mesh.
std::vector<ElementPoint> element_quadrature(const mesh::TriMesh& mesh, std::size_t t);

struct StokesSystem {
    FunctionSpace space;
    SparseMatrix A;     ///< ⟨Au, w⟩ = ∫ Σᵢ ∇uᵢ·∇wᵢ
    SparseMatrix B;     ///< (λ, Bu) = ∫ λ div u; rows are pressure dofs
    Eigen::VectorXd f;  ///< ∫ f·w
    Eigen::VectorXd g;  ///< ∫_{Γᴺ} g·w dS (zero without traction data)
    bool has_traction = false;
};

/// Assembles the Taylor-Hood Stokes system. Throws EmptyDirichletBoundary
/// when the mesh has no Dirichlet edge.
StokesSystem assemble(const mesh::TriMesh& mesh, const fields::VectorField& force,
                      const std::optional<fields::TractionField>& traction = std::nullopt);

enum class PressureMode {
    /// Γᴺ ≠ ∅: the pressure is determined by the natural boundary condition.
    Mixed,
    /// Pure Dirichlet: pressure dof 0 is pinned, then the solution is shifted
    /// to zero mean.
    Pinned,
};

struct StokesSolution {
    Eigen::VectorXd u;
    Eigen::VectorXd lambda;
    double momentum_residual = 0.0;    ///< ‖Au − f − g − Bᵀλ‖
    double divergence_residual = 0.0;  ///< ‖Bu‖
};

/// Direct sparse solve of [[A, −Bᵀ], [−B, 0]](u, λ) = (f + g, 0).
/// Throws SingularSystem when the factorization fails.
StokesSolution solve_stokes(const StokesSystem& sys, PressureMode mode = PressureMode::Mixed);

/// ½uᵀAu − (f + g)ᵀu
double energy(const StokesSystem& sys, const StokesSolution& sol);

/// True when the recomputed residuals of (u, λ) satisfy 1e-9·(1 + ‖f + g‖).
bool is_solved(const StokesSystem& sys, const StokesSolution& sol);

/// P1 pressure mass matrix.
SparseMatrix pressure_mass(const mesh::TriMesh& mesh);

/// Discrete inf-sup constant min over λ of sup over u of (λ, Bu)/(‖u‖_A ‖λ‖_{L²}),
/// i.e. the square root of the smallest eigenvalue of B A⁻¹ Bᵀ x = β² M x.
double inf_sup_constant(const StokesSystem& sys);

struct NodalErrors {
    double velocity_max = 0.0;  ///< over all P2 nodes
    double pressure_max = 0.0;  ///< over all vertices
};

NodalErrors nodal_errors(const StokesSystem& sys, const StokesSolution& sol, const fields::ExactSolution& exact);

/// H¹ seminorm of u_h − u.
double velocity_h1_error(const StokesSystem& sys, const StokesSolution& sol, const fields::ExactSolution& exact);

struct ConvergenceRow {
    int n = 0;
    double h1_error = 0.0;
    std::optional<double> order;  ///< against the previous row
};

/// Solves the manufactured problem of `exact` on unit-square meshes with the
/// given Neumann sides (traction taken from the exact solution) and reports
/// H¹ velocity errors with observed orders.
std::vector<ConvergenceRow> convergence_study(const fields::ExactSolution& exact, const std::vector<int>& n_list,
                                              mesh::NeumannSides neumann);

}  // namespace shapederiv::stokes
