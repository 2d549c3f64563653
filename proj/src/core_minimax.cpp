#include "shapederiv/core_minimax.hpp"

#include "shapederiv/error.hpp"
#include "shapederiv/symmetric_indefinite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapederiv::minimax {

std::string_view to_string(ConeKind kind) {
    return kind == ConeKind::Equality ? "equality" : "inequality";
}

ConeKind cone_kind_from_string(std::string_view name) {
    if (name == "equality") return ConeKind::Equality;
    if (name == "inequality") return ConeKind::Inequality;
    throw Error(ErrorKind::ParseError, "unknown cone kind '" + std::string(name) + "'");
}

void ConeQP::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || f.size() != n || (B.rows() > 0 && B.cols() != n)) {
        throw Error(ErrorKind::DimensionMismatch, "ConeQP needs A n×n, B m×n, f of length n");
    }
    if (B.rows() > n) {
        throw Error(ErrorKind::RankDeficientB, "more constraints than unknowns");
    }
    const double amax = n > 0 ? A.cwiseAbs().maxCoeff() : 0.0;
    if (n > 0 && (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * amax) {
        throw Error(ErrorKind::NotPositiveDefinite, "A is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization of A failed");
    }
    if (B.rows() > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
        const auto& sv = svd.singularValues();
        const double tol = 1e-12 * static_cast<double>(std::max(B.rows(), B.cols())) * sv(0);
        if (sv(sv.size() - 1) <= tol) {
            throw Error(ErrorKind::RankDeficientB, "B does not have full row rank (dual variable not unique)");
        }
    }
}

PerturbationDirection PerturbationDirection::zero(const ConeQP& qp) {
    return {Eigen::MatrixXd::Zero(qp.A.rows(), qp.A.cols()), Eigen::MatrixXd::Zero(qp.B.rows(), qp.B.cols()),
            Eigen::VectorXd::Zero(qp.f.size())};
}

namespace {

struct EqualityKkt {
    Eigen::VectorXd u;
    Eigen::VectorXd multipliers;
};

// [[A, -Bᵀ], [-B, 0]] (u, μ) = (f, 0), one step of iterative refinement.
EqualityKkt solve_equality_kkt(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& f) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.rows();
    if (m == 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        return {llt.solve(f), Eigen::VectorXd::Zero(0)};
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = A;
    kkt.topRightCorner(n, m) = -B.transpose();
    kkt.bottomLeftCorner(m, n) = -B;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    rhs.head(n) = f;

    const SymmetricIndefiniteFactorization factor(kkt);
    Eigen::VectorXd x = factor.solve(rhs);
    x += factor.solve(rhs - kkt * x);
    return {x.head(n), x.tail(m)};
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& B, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), B.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = B.row(rows[k]);
    return out;
}

SaddlePoint solve_active_set(const ConeQP& qp, const SolverOptions& options) {
    const Eigen::Index n = qp.primal_dim();
    const Eigen::Index m = qp.dual_dim();
    const double fscale = 1.0 + qp.f.lpNorm<Eigen::Infinity>();
    const double multiplier_tol = 1e-12 * fscale;

    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);  // feasible for every B
    std::vector<int> working;
    std::vector<char> in_working(static_cast<std::size_t>(m), 0);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const EqualityKkt eq = solve_equality_kkt(qp.A, select_rows(qp.B, working), qp.f);
        const Eigen::VectorXd step = eq.u - u;
        const double step_tol = 1e-12 * (1.0 + eq.u.lpNorm<Eigen::Infinity>());

        if (step.lpNorm<Eigen::Infinity>() <= step_tol) {
            // Most negative multiplier leaves; lowest index on ties.
            int leave = -1;
            double most_negative = -multiplier_tol;
            for (std::size_t k = 0; k < working.size(); ++k) {
                const double mu = eq.multipliers(static_cast<Eigen::Index>(k));
                if (mu < most_negative) {
                    most_negative = mu;
                    leave = static_cast<int>(k);
                }
            }
            if (leave < 0) {
                SaddlePoint sp;
                sp.u = eq.u;
                sp.lambda = Eigen::VectorXd::Zero(m);
                for (std::size_t k = 0; k < working.size(); ++k) {
                    sp.lambda(working[k]) = eq.multipliers(static_cast<Eigen::Index>(k));
                }
                sp.active_set = working;
                sp.iterations = iter;
                return sp;
            }
            in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(leave)])] = 0;
            working.erase(working.begin() + leave);
            continue;
        }

        // Ratio test; the first (lowest-index) blocking constraint wins ties.
        double alpha = 1.0;
        int blocking = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_working[static_cast<std::size_t>(i)]) continue;
            const double slope = qp.B.row(i).dot(step);
            if (slope >= 0.0) continue;
            const double ratio = std::max(0.0, -qp.B.row(i).dot(u) / slope);
            if (ratio < alpha) {
                alpha = ratio;
                blocking = static_cast<int>(i);
            }
        }
        if (blocking < 0) {
            u = eq.u;
        } else {
            u += alpha * step;
            in_working[static_cast<std::size_t>(blocking)] = 1;
            working.insert(std::upper_bound(working.begin(), working.end(), blocking), blocking);
        }
    }
    throw Error(ErrorKind::MaxIterations, "active-set iteration did not terminate");
}

}  // namespace

double kkt_residual(const ConeQP& qp, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
    if (u.size() != qp.primal_dim() || lambda.size() != qp.dual_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "saddle point dimensions do not match the problem");
    }
    const Eigen::VectorXd bu = qp.B * u;
    double res = (qp.A * u - qp.f - qp.B.transpose() * lambda).lpNorm<Eigen::Infinity>();
    if (qp.cone == ConeKind::Equality) {
        res = std::max(res, bu.size() > 0 ? bu.lpNorm<Eigen::Infinity>() : 0.0);
    } else {
        for (Eigen::Index i = 0; i < bu.size(); ++i) {
            res = std::max(res, -bu(i));
            res = std::max(res, -lambda(i));
        }
        res = std::max(res, std::abs(lambda.dot(bu)));
    }
    return res;
}

SaddlePoint solve_saddle_point(const ConeQP& qp, const SolverOptions& options) {
    qp.validate();
    SaddlePoint sp;
    if (qp.cone == ConeKind::Equality) {
        const EqualityKkt eq = solve_equality_kkt(qp.A, qp.B, qp.f);
        sp.u = eq.u;
        sp.lambda = eq.multipliers;
        sp.iterations = 1;
    } else {
        sp = solve_active_set(qp, options);
    }
    sp.kkt_residual = kkt_residual(qp, sp.u, sp.lambda);
    return sp;
}

double objective_value(const ConeQP& qp, const Eigen::VectorXd& u) {
    if (u.size() != qp.primal_dim() || qp.A.cols() != u.size() || qp.f.size() != u.size()) {
        throw Error(ErrorKind::DimensionMismatch, "objective_value: u does not match the problem");
    }
    return 0.5 * u.dot(qp.A * u) - qp.f.dot(u);
}

double lagrangian_value(const ConeQP& qp, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
    if (lambda.size() != qp.dual_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "lagrangian_value: lambda does not match the problem");
    }
    const double e = objective_value(qp, u);
    if (qp.dual_dim() == 0) return e;
    return e - lambda.dot(qp.B * u);
}

double shape_derivative(const ConeQP& qp, const PerturbationDirection& dir, const SaddlePoint& sp) {
    const Eigen::Index n = qp.primal_dim();
    const Eigen::Index m = qp.dual_dim();
    if (dir.A1.rows() != n || dir.A1.cols() != n || dir.f1.size() != n || dir.B1.rows() != m ||
        (m > 0 && dir.B1.cols() != n) || sp.u.size() != n || sp.lambda.size() != m) {
        throw Error(ErrorKind::DimensionMismatch, "shape_derivative: direction or saddle point does not match");
    }
    double value = 0.5 * sp.u.dot(dir.A1 * sp.u) - dir.f1.dot(sp.u);
    if (m > 0) value -= sp.lambda.dot(dir.B1 * sp.u);
    return value;
}

ConeQP perturbed_qp(const ConeQP& qp, const PerturbationDirection& dir, double s) {
    if (dir.A1.rows() != qp.A.rows() || dir.A1.cols() != qp.A.cols() || dir.B1.rows() != qp.B.rows() ||
        dir.B1.cols() != qp.B.cols() || dir.f1.size() != qp.f.size()) {
        throw Error(ErrorKind::DimensionMismatch, "perturbed_qp: direction does not match the problem");
    }
    ConeQP out{qp.A + s * dir.A1, qp.B + s * dir.B1, qp.f + s * dir.f1, qp.cone};
    out.validate();
    return out;
}

double fd_derivative(const ConeQP& qp, const PerturbationDirection& dir, double s, const SolverOptions& options) {
    const ConeQP plus = perturbed_qp(qp, dir, s);
    const ConeQP minus = perturbed_qp(qp, dir, -s);
    const double e_plus = objective_value(plus, solve_saddle_point(plus, options).u);
    const double e_minus = objective_value(minus, solve_saddle_point(minus, options).u);
    return (e_plus - e_minus) / (2.0 * s);
}

double check_lbb(const ConeQP& qp) {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.A);
    if (qp.A.rows() != qp.A.cols() || llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "check_lbb: Cholesky factorization of A failed");
    }
    if (qp.B.rows() == 0) return std::numeric_limits<double>::infinity();
    // B L⁻ᵀ = (L⁻¹ Bᵀ)ᵀ
    const Eigen::MatrixXd scaled = llt.matrixL().solve(qp.B.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto& sv = svd.singularValues();
    if (scaled.rows() > scaled.cols()) return 0.0;
    return sv(sv.size() - 1);
}

FdStudy fd_study(const ConeQP& qp, const PerturbationDirection& dir, const std::vector<double>& s_list,
                 const SolverOptions& options) {
    FdStudy study;
    const SaddlePoint sp = solve_saddle_point(qp, options);
    study.L1 = shape_derivative(qp, dir, sp);
    for (double s : s_list) {
        const double fd = fd_derivative(qp, dir, s, options);
        study.rows.push_back({s, fd, std::abs(fd - study.L1)});
    }
    return study;
}

}  // namespace shapederiv::minimax
