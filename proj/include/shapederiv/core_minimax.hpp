#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace shapederiv::minimax {

enum class ConeKind {
    Inequality,  ///< K = {u : Bu >= 0}
    Equality,    ///< K = {u : Bu = 0}
};

std::string_view to_string(ConeKind kind);
ConeKind cone_kind_from_string(std::string_view name);

/// Quadratic minimization over a polyhedral cone:
///   min ½uᵀAu − fᵀu  subject to  u ∈ K(B).
/// A must be symmetric positive definite and B of full row rank.
struct ConeQP {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd f;
    ConeKind cone = ConeKind::Equality;

    [[nodiscard]] Eigen::Index primal_dim() const { return A.rows(); }
    [[nodiscard]] Eigen::Index dual_dim() const { return B.rows(); }

    /// Checks shapes, symmetry, positive definiteness of A and the row rank
    /// of B. Throws the matching Error kind on failure.
    void validate() const;
};

/// First-order perturbation (A¹, B¹, f¹) of a ConeQP along a domain flow.
struct PerturbationDirection {
    Eigen::MatrixXd A1;
    Eigen::MatrixXd B1;
    Eigen::VectorXd f1;

    static PerturbationDirection zero(const ConeQP& qp);
};

struct SaddlePoint {
    Eigen::VectorXd u;
    Eigen::VectorXd lambda;
    std::vector<int> active_set;  ///< 0-based constraint indices; inequality cone only
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct SolverOptions {
    /// Relative tolerance; absolute checks use tolerance * (1 + ‖f‖).
    double tolerance = 1e-10;
    int max_iterations = 500;
};

/// Primal-dual solution of the cone QP. Equality cones are one bordered KKT
/// solve; inequality cones run a primal active-set iteration starting from
/// the feasible point u = 0, each working set solved as an equality KKT
/// system.
SaddlePoint solve_saddle_point(const ConeQP& qp, const SolverOptions& options = {});

/// ½uᵀAu − fᵀu
double objective_value(const ConeQP& qp, const Eigen::VectorXd& u);

/// objective_value(u) − λᵀBu
double lagrangian_value(const ConeQP& qp, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda);

/// Lagrangian derivative ½uᵀA¹u − f¹ᵀu − λᵀB¹u at a solved saddle point.
double shape_derivative(const ConeQP& qp, const PerturbationDirection& dir, const SaddlePoint& sp);

/// (A + sA¹, B + sB¹, f + sf¹), validated.
ConeQP perturbed_qp(const ConeQP& qp, const PerturbationDirection& dir, double s);

/// Central difference [E(s) − E(−s)] / (2s) of the optimal objective value.
double fd_derivative(const ConeQP& qp, const PerturbationDirection& dir, double s,
                     const SolverOptions& options = {});

/// Smallest singular value of B·L⁻ᵀ with A = LLᵀ: the discrete inf-sup
/// constant measured in the A-norm.
double check_lbb(const ConeQP& qp);

/// Residual of the KKT conditions for the given cone kind (max-norm of the
/// stationarity, feasibility, dual feasibility and complementarity defects).
double kkt_residual(const ConeQP& qp, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda);

/// One row of a finite-difference table.
struct FdRow {
    double s = 0.0;
    double fd = 0.0;
    double abs_err = 0.0;
};

struct FdStudy {
    double L1 = 0.0;
    std::vector<FdRow> rows;
};

FdStudy fd_study(const ConeQP& qp, const PerturbationDirection& dir, const std::vector<double>& s_list,
                 const SolverOptions& options = {});

}  // namespace shapederiv::minimax
