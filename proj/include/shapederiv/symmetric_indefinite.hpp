#pragma once

#include <Eigen/Dense>

#include <vector>

namespace shapederiv {

/// Dense Bunch-Kaufman factorization P K Pᵀ = L D Lᵀ of a symmetric,
/// possibly indefinite matrix. D is block diagonal with 1x1 and 2x2 blocks,
/// L is unit lower triangular. Used for the bordered KKT matrices
/// [[A, -Bᵀ], [-B, 0]] of the saddle-point problems.
class SymmetricIndefiniteFactorization {
public:
    struct Inertia {
        int positive = 0;
        int negative = 0;
        int zero = 0;
    };

    /// Factorizes `matrix` (only symmetry up to rounding is assumed).
    /// Throws Error{SingularSystem} when a pivot vanishes relative to the
    /// largest entry.
    explicit SymmetricIndefiniteFactorization(const Eigen::MatrixXd& matrix);

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    /// Signature of the factorized matrix, read off the blocks of D.
    [[nodiscard]] Inertia inertia() const;

    [[nodiscard]] Eigen::Index size() const { return lower_.rows(); }

private:
    Eigen::MatrixXd lower_;
    Eigen::MatrixXd block_diag_;   // tridiagonal storage of D
    std::vector<int> block_size_;  // 1 or 2, indexed by first row of the block
    std::vector<Eigen::Index> perm_;
};

}  // namespace shapederiv
