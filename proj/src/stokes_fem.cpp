#include "shapederiv/stokes_fem.hpp"

#include "shapederiv/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>

namespace shapederiv::stokes {

namespace {

using Triplet = Eigen::Triplet<double>;

// Dunavant degree-4 rule: barycentric orbits (a, a, 1 − 2a), weights sum to one.
constexpr double kA1 = 0.44594849091596488632;
constexpr double kW1 = 0.22338158967801146570;
constexpr double kA2 = 0.09157621350977074346;
constexpr double kW2 = 0.10995174365532186764;

struct BaryPoint {
    double l0, l1, l2, w;
};

constexpr std::array<BaryPoint, 6> kTriangleRule{{
    {kA1, kA1, 1.0 - 2.0 * kA1, kW1},
    {kA1, 1.0 - 2.0 * kA1, kA1, kW1},
    {1.0 - 2.0 * kA1, kA1, kA1, kW1},
    {kA2, kA2, 1.0 - 2.0 * kA2, kW2},
    {kA2, 1.0 - 2.0 * kA2, kA2, kW2},
    {1.0 - 2.0 * kA2, kA2, kA2, kW2},
}};

// 3-point Gauss-Legendre on [0, 1], exact to degree 5.
struct LinePoint {
    double t, w;
};
const std::array<LinePoint, 3> kEdgeRule{{
    {0.5 * (1.0 - std::sqrt(0.6)), 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.5 * (1.0 + std::sqrt(0.6)), 5.0 / 18.0},
}};

constexpr std::array<std::array<int, 2>, 3> kElementEdges{{{0, 1}, {1, 2}, {2, 0}}};

std::pair<int, int> sorted_pair(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

FunctionSpace::FunctionSpace(mesh::TriMesh mesh) : mesh_(std::move(mesh)) {
    mesh_.validate();
    const int nv = static_cast<int>(mesh_.vertices.size());
    node_pos_ = mesh_.vertices;

    std::map<std::pair<int, int>, int> edges;
    element_nodes_.reserve(mesh_.triangles.size());
    for (const auto& tri : mesh_.triangles) {
        std::array<int, 6> nodes{tri[0], tri[1], tri[2], 0, 0, 0};
        for (std::size_t e = 0; e < 3; ++e) {
            const int a = tri[static_cast<std::size_t>(kElementEdges[e][0])];
            const int b = tri[static_cast<std::size_t>(kElementEdges[e][1])];
            const auto [it, inserted] = edges.emplace(sorted_pair(a, b), nv + static_cast<int>(edges.size()));
            if (inserted) {
                node_pos_.push_back(0.5 * (mesh_.vertices[static_cast<std::size_t>(a)] +
                                           mesh_.vertices[static_cast<std::size_t>(b)]));
            }
            nodes[3 + e] = it->second;
        }
        element_nodes_.push_back(nodes);
    }
    edge_nodes_.assign(edges.begin(), edges.end());

    dirichlet_.assign(node_pos_.size(), 0);
    for (const auto& e : mesh_.boundary_edges) {
        if (e.tag != mesh::BoundaryTag::Dirichlet) continue;
        dirichlet_[static_cast<std::size_t>(e.a)] = 1;
        dirichlet_[static_cast<std::size_t>(e.b)] = 1;
        dirichlet_[static_cast<std::size_t>(edge_node(e.a, e.b))] = 1;
    }
    dof_.assign(2 * node_pos_.size(), -1);
    for (std::size_t node = 0; node < node_pos_.size(); ++node) {
        if (dirichlet_[node]) continue;
        dof_[2 * node] = num_velocity_dofs_++;
        dof_[2 * node + 1] = num_velocity_dofs_++;
    }
}

int FunctionSpace::edge_node(int a, int b) const {
    const auto key = sorted_pair(a, b);
    const auto it = std::lower_bound(edge_nodes_.begin(), edge_nodes_.end(), key,
                                     [](const auto& entry, const auto& k) { return entry.first < k; });
    if (it == edge_nodes_.end() || it->first != key) {
        throw Error(ErrorKind::DimensionMismatch, "edge is not part of the mesh");
    }
    return it->second;
}

std::vector<Vec2> FunctionSpace::expand_velocity(const Eigen::VectorXd& u) const {
    if (u.size() != num_velocity_dofs_) {
        throw Error(ErrorKind::DimensionMismatch, "velocity vector does not match the function space");
    }
    std::vector<Vec2> nodal(node_pos_.size(), Vec2::Zero());
    for (int node = 0; node < num_nodes(); ++node) {
        for (int c = 0; c < 2; ++c) {
            const int d = velocity_dof(node, c);
            if (d >= 0) nodal[static_cast<std::size_t>(node)](c) = u(d);
        }
    }
    return nodal;
}

Eigen::VectorXd FunctionSpace::interpolate_velocity(const std::function<Vec2(const Vec2&)>& velocity) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(num_velocity_dofs_);
    for (int node = 0; node < num_nodes(); ++node) {
        const Vec2 v = velocity(node_position(node));
        for (int c = 0; c < 2; ++c) {
            const int d = velocity_dof(node, c);
            if (d >= 0) u(d) = v(c);
        }
    }
    return u;
}

std::vector<ElementPoint> element_quadrature(const mesh::TriMesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Vec2& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Vec2& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    Mat2 jac;
    jac.col(0) = p1 - p0;
    jac.col(1) = p2 - p0;
    const double area = 0.5 * jac.determinant();
    const Mat2 inv_t = jac.inverse().transpose();
    std::array<Vec2, 3> grad_l;
    grad_l[1] = inv_t.col(0);
    grad_l[2] = inv_t.col(1);
    grad_l[0] = -(grad_l[1] + grad_l[2]);

    std::vector<ElementPoint> points;
    points.reserve(kTriangleRule.size());
    for (const auto& q : kTriangleRule) {
        const std::array<double, 3> l{q.l0, q.l1, q.l2};
        ElementPoint pt;
        pt.x = l[0] * p0 + l[1] * p1 + l[2] * p2;
        pt.weight = q.w * area;
        for (std::size_t k = 0; k < 3; ++k) {
            pt.psi[k] = l[k];
            pt.phi[k] = l[k] * (2.0 * l[k] - 1.0);
            pt.grad_phi[k] = (4.0 * l[k] - 1.0) * grad_l[k];
        }
        for (std::size_t e = 0; e < 3; ++e) {
            const auto a = static_cast<std::size_t>(kElementEdges[e][0]);
            const auto b = static_cast<std::size_t>(kElementEdges[e][1]);
            pt.phi[3 + e] = 4.0 * l[a] * l[b];
            pt.grad_phi[3 + e] = 4.0 * (l[b] * grad_l[a] + l[a] * grad_l[b]);
        }
        points.push_back(pt);
    }
    return points;
}

StokesSystem assemble(const mesh::TriMesh& mesh, const fields::VectorField& force,
                      const std::optional<fields::TractionField>& traction) {
    if (mesh.count_edges(mesh::BoundaryTag::Dirichlet) == 0) {
        throw Error(ErrorKind::EmptyDirichletBoundary, "the velocity needs a non-empty Dirichlet boundary");
    }
    StokesSystem sys{FunctionSpace(mesh), {}, {}, {}, {}, traction.has_value()};
    const FunctionSpace& space = sys.space;
    const int nu = space.num_velocity_dofs();
    const int np = space.num_pressure_dofs();
    sys.f = Eigen::VectorXd::Zero(nu);
    sys.g = Eigen::VectorXd::Zero(nu);

    std::vector<Triplet> a_entries;
    std::vector<Triplet> b_entries;
    const auto& m = space.mesh();
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& nodes = space.element_nodes(t);
        const auto& tri = m.triangles[t];
        Eigen::Matrix<double, 6, 6> stiff = Eigen::Matrix<double, 6, 6>::Zero();
        // div[k][b][c]: ∫ ψ_k ∂_c φ_b
        std::array<std::array<Vec2, 6>, 3> div{};
        std::array<Vec2, 6> load{};
        for (auto& row : div) row.fill(Vec2::Zero());
        load.fill(Vec2::Zero());
        for (const ElementPoint& pt : element_quadrature(m, t)) {
            const Vec2 fx = force.value(pt.x);
            for (std::size_t a = 0; a < 6; ++a) {
                for (std::size_t b = 0; b < 6; ++b) stiff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                    pt.weight * pt.grad_phi[a].dot(pt.grad_phi[b]);
                load[a] += pt.weight * pt.phi[a] * fx;
                for (std::size_t k = 0; k < 3; ++k) div[k][a] += pt.weight * pt.psi[k] * pt.grad_phi[a];
            }
        }
        for (std::size_t a = 0; a < 6; ++a) {
            for (int c = 0; c < 2; ++c) {
                const int da = space.velocity_dof(nodes[a], c);
                if (da < 0) continue;
                sys.f(da) += load[a](c);
                for (std::size_t b = 0; b < 6; ++b) {
                    const int db = space.velocity_dof(nodes[b], c);
                    if (db >= 0) {
                        a_entries.emplace_back(da, db, stiff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
                    }
                }
                for (std::size_t k = 0; k < 3; ++k) b_entries.emplace_back(tri[k], da, div[k][a](c));
            }
        }
    }
    sys.A.resize(nu, nu);
    sys.A.setFromTriplets(a_entries.begin(), a_entries.end());
    sys.B.resize(np, nu);
    sys.B.setFromTriplets(b_entries.begin(), b_entries.end());

    if (traction) {
        for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
            const auto& edge = m.boundary_edges[e];
            if (edge.tag != mesh::BoundaryTag::Neumann) continue;
            const Vec2& pa = m.vertices[static_cast<std::size_t>(edge.a)];
            const Vec2& pb = m.vertices[static_cast<std::size_t>(edge.b)];
            const Vec2 normal = m.outward_normal(e);
            const double length = (pb - pa).norm();
            const std::array<int, 3> nodes{edge.a, space.edge_node(edge.a, edge.b), edge.b};
            for (const auto& q : kEdgeRule) {
                const double t = q.t;
                const std::array<double, 3> shape{(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)};
                const Vec2 gx = traction->value((1.0 - t) * pa + t * pb, normal);
                for (std::size_t k = 0; k < 3; ++k) {
                    for (int c = 0; c < 2; ++c) {
                        const int d = space.velocity_dof(nodes[k], c);
                        if (d >= 0) sys.g(d) += q.w * length * shape[k] * gx(c);
                    }
                }
            }
        }
    }
    return sys;
}

StokesSolution solve_stokes(const StokesSystem& sys, PressureMode mode) {
    const int nu = sys.space.num_velocity_dofs();
    const int np = sys.space.num_pressure_dofs();
    const int pinned = mode == PressureMode::Pinned ? 0 : -1;
    const int kept = pinned >= 0 ? np - 1 : np;
    const auto row_of = [pinned](int p) { return pinned < 0 || p < pinned ? p : p - 1; };

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(sys.A.nonZeros() + 2 * sys.B.nonZeros()));
    for (int k = 0; k < sys.A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
    }
    for (int k = 0; k < sys.B.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.B, k); it; ++it) {
            const int p = static_cast<int>(it.row());
            if (p == pinned) continue;
            entries.emplace_back(nu + row_of(p), it.col(), -it.value());
            entries.emplace_back(it.col(), nu + row_of(p), -it.value());
        }
    }
    SparseMatrix kkt(nu + kept, nu + kept);
    kkt.setFromTriplets(entries.begin(), entries.end());
    kkt.makeCompressed();

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu + kept);
    rhs.head(nu) = sys.f + sys.g;

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(kkt);
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success) {
        throw Error(ErrorKind::SingularSystem, "saddle-point factorization failed (discrete inf-sup violated?)");
    }
    Eigen::VectorXd x = lu.solve(rhs);
    x += lu.solve(rhs - kkt * x);
    if (!x.allFinite()) {
        throw Error(ErrorKind::SingularSystem, "saddle-point solve produced non-finite values");
    }

    StokesSolution sol;
    sol.u = x.head(nu);
    sol.lambda = Eigen::VectorXd::Zero(np);
    for (int p = 0; p < np; ++p) {
        if (p != pinned) sol.lambda(p) = x(nu + row_of(p));
    }
    if (pinned >= 0) {
        // Shift to the zero-mean representative; B annihilates constants without Neumann edges.
        const SparseMatrix mass = pressure_mass(sys.space.mesh());
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(np);
        const double mean = ones.dot(mass * sol.lambda) / ones.dot(mass * ones);
        sol.lambda.array() -= mean;
    }
    sol.momentum_residual = (sys.A * sol.u - sys.f - sys.g - sys.B.transpose() * sol.lambda).norm();
    sol.divergence_residual = (sys.B * sol.u).norm();
    return sol;
}

double energy(const StokesSystem& sys, const StokesSolution& sol) {
    if (sol.u.size() != sys.A.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "energy: solution does not match the system");
    }
    return 0.5 * sol.u.dot(sys.A * sol.u) - (sys.f + sys.g).dot(sol.u);
}

bool is_solved(const StokesSystem& sys, const StokesSolution& sol) {
    if (sol.u.size() != sys.A.rows() || sol.lambda.size() != sys.B.rows()) return false;
    const Eigen::VectorXd load = sys.f + sys.g;
    const double tol = 1e-9 * (1.0 + load.norm());
    // Recomputed rather than trusting the stored residuals.
    const double momentum = (sys.A * sol.u - load - sys.B.transpose() * sol.lambda).norm();
    const double divergence = (sys.B * sol.u).norm();
    return momentum <= tol && divergence <= tol;
}

SparseMatrix pressure_mass(const mesh::TriMesh& mesh) {
    std::vector<Triplet> entries;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double area = mesh.signed_area(t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) entries.emplace_back(tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0));
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
    SparseMatrix mass(n, n);
    mass.setFromTriplets(entries.begin(), entries.end());
    return mass;
}

double inf_sup_constant(const StokesSystem& sys) {
    Eigen::SimplicialLDLT<SparseMatrix> a_factor(sys.A);
    if (a_factor.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "velocity stiffness matrix is not positive definite");
    }
    const Eigen::MatrixXd bt = Eigen::MatrixXd(sys.B.transpose());
    const Eigen::MatrixXd a_inv_bt = a_factor.solve(bt);
    const Eigen::MatrixXd schur = sys.B * a_inv_bt;
    const Eigen::MatrixXd mass = Eigen::MatrixXd(pressure_mass(sys.space.mesh()));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (schur + schur.transpose()), mass,
                                                                   Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::SingularSystem, "inf-sup eigenvalue problem failed");
    }
    return std::sqrt(std::max(0.0, eig.eigenvalues()(0)));
}

NodalErrors nodal_errors(const StokesSystem& sys, const StokesSolution& sol, const fields::ExactSolution& exact) {
    NodalErrors err;
    const auto nodal = sys.space.expand_velocity(sol.u);
    for (int node = 0; node < sys.space.num_nodes(); ++node) {
        const Vec2 diff = nodal[static_cast<std::size_t>(node)] - exact.velocity(sys.space.node_position(node));
        err.velocity_max = std::max(err.velocity_max, diff.lpNorm<Eigen::Infinity>());
    }
    const auto& vertices = sys.space.mesh().vertices;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        err.pressure_max =
            std::max(err.pressure_max, std::abs(sol.lambda(static_cast<Eigen::Index>(v)) - exact.pressure(vertices[v])));
    }
    return err;
}

double velocity_h1_error(const StokesSystem& sys, const StokesSolution& sol, const fields::ExactSolution& exact) {
    const auto nodal = sys.space.expand_velocity(sol.u);
    const auto& m = sys.space.mesh();
    double sum = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& nodes = sys.space.element_nodes(t);
        for (const ElementPoint& pt : element_quadrature(m, t)) {
            Mat2 grad = Mat2::Zero();
            for (std::size_t a = 0; a < 6; ++a) {
                grad += nodal[static_cast<std::size_t>(nodes[a])] * pt.grad_phi[a].transpose();
            }
            sum += pt.weight * (grad - exact.velocity_gradient(pt.x)).squaredNorm();
        }
    }
    return std::sqrt(sum);
}

std::vector<ConvergenceRow> convergence_study(const fields::ExactSolution& exact, const std::vector<int>& n_list,
                                              mesh::NeumannSides neumann) {
    const bool mixed = neumann.left || neumann.right || neumann.top || neumann.bottom;
    std::vector<ConvergenceRow> rows;
    for (int n : n_list) {
        const mesh::TriMesh m = mesh::unit_square_mesh(n, neumann);
        std::optional<fields::TractionField> traction;
        if (mixed) traction = exact.traction();
        const StokesSystem sys = assemble(m, exact.force, traction);
        const StokesSolution sol = solve_stokes(sys, mixed ? PressureMode::Mixed : PressureMode::Pinned);
        ConvergenceRow row{n, velocity_h1_error(sys, sol, exact), std::nullopt};
        if (!rows.empty()) {
            const ConvergenceRow& prev = rows.back();
            if (prev.h1_error > 0.0 && row.h1_error > 0.0) {
                row.order = std::log(prev.h1_error / row.h1_error) / std::log(static_cast<double>(n) / prev.n);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace shapederiv::stokes
