#include "shapederiv/symmetric_indefinite.hpp"

#include "shapederiv/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace shapederiv {

namespace {

// Bunch-Kaufman growth constant (1 + sqrt(17)) / 8.
const double kAlpha = (1.0 + std::sqrt(17.0)) / 8.0;

void symmetric_swap(Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
    if (a == b) return;
    m.row(a).swap(m.row(b));
    m.col(a).swap(m.col(b));
}

}  // namespace

SymmetricIndefiniteFactorization::SymmetricIndefiniteFactorization(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "indefinite factorization needs a square matrix");
    }
    const Eigen::Index n = matrix.rows();
    Eigen::MatrixXd work = 0.5 * (matrix + matrix.transpose());
    lower_ = Eigen::MatrixXd::Identity(n, n);
    block_diag_ = Eigen::MatrixXd::Zero(n, n);
    block_size_.assign(static_cast<std::size_t>(n), 0);
    perm_.resize(static_cast<std::size_t>(n));
    std::iota(perm_.begin(), perm_.end(), Eigen::Index{0});

    const double scale = n > 0 ? work.cwiseAbs().maxCoeff() : 0.0;
    const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(n + 1) * scale;

    auto swap_positions = [&](Eigen::Index a, Eigen::Index b) {
        if (a == b) return;
        symmetric_swap(work, a, b);
        lower_.row(a).head(std::min(a, b)).swap(lower_.row(b).head(std::min(a, b)));
        std::swap(perm_[static_cast<std::size_t>(a)], perm_[static_cast<std::size_t>(b)]);
    };

    Eigen::Index k = 0;
    while (k < n) {
        const double absakk = std::abs(work(k, k));
        Eigen::Index imax = k;
        double colmax = 0.0;
        if (k + 1 < n) {
            colmax = work.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&imax);
            imax += k + 1;
        }
        if (std::max(absakk, colmax) <= tiny) {
            throw Error(ErrorKind::SingularSystem, "zero pivot in symmetric indefinite factorization");
        }

        int size = 1;
        Eigen::Index pivot = k;
        if (absakk < kAlpha * colmax) {
            double rowmax = 0.0;
            for (Eigen::Index j = k; j < n; ++j) {
                if (j != imax) rowmax = std::max(rowmax, std::abs(work(imax, j)));
            }
            if (absakk * rowmax >= kAlpha * colmax * colmax) {
                pivot = k;
            } else if (std::abs(work(imax, imax)) >= kAlpha * rowmax) {
                pivot = imax;
            } else {
                pivot = imax;
                size = 2;
            }
        }

        const Eigen::Index rest = n - k - size;
        if (size == 1) {
            swap_positions(k, pivot);
            const double d = work(k, k);
            block_diag_(k, k) = d;
            block_size_[static_cast<std::size_t>(k)] = 1;
            if (rest > 0) {
                const Eigen::VectorXd col = work.col(k).tail(rest);
                lower_.col(k).tail(rest) = col / d;
                work.bottomRightCorner(rest, rest).noalias() -= col * col.transpose() / d;
            }
        } else {
            swap_positions(k + 1, pivot);
            const Eigen::Matrix2d d = work.block<2, 2>(k, k);
            if (std::abs(d.determinant()) <= tiny * tiny) {
                throw Error(ErrorKind::SingularSystem, "singular 2x2 pivot in symmetric indefinite factorization");
            }
            block_diag_.block<2, 2>(k, k) = d;
            block_size_[static_cast<std::size_t>(k)] = 2;
            if (rest > 0) {
                const Eigen::MatrixXd cols = work.block(k + size, k, rest, 2);
                const Eigen::MatrixXd l = cols * d.inverse();
                lower_.block(k + size, k, rest, 2) = l;
                work.bottomRightCorner(rest, rest).noalias() -= l * cols.transpose();
            }
        }
        k += size;
    }
}

Eigen::VectorXd SymmetricIndefiniteFactorization::solve(const Eigen::VectorXd& rhs) const {
    const Eigen::Index n = size();
    if (rhs.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "right-hand side length does not match factorization");
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = rhs(perm_[static_cast<std::size_t>(i)]);

    lower_.triangularView<Eigen::UnitLower>().solveInPlace(y);
    for (Eigen::Index k = 0; k < n;) {
        if (block_size_[static_cast<std::size_t>(k)] == 1) {
            y(k) /= block_diag_(k, k);
            k += 1;
        } else {
            const Eigen::Matrix2d d = block_diag_.block<2, 2>(k, k);
            y.segment<2>(k) = d.inverse() * y.segment<2>(k).eval();
            k += 2;
        }
    }
    lower_.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(y);

    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(perm_[static_cast<std::size_t>(i)]) = y(i);
    return x;
}

SymmetricIndefiniteFactorization::Inertia SymmetricIndefiniteFactorization::inertia() const {
    Inertia result;
    for (Eigen::Index k = 0; k < size();) {
        if (block_size_[static_cast<std::size_t>(k)] == 1) {
            const double d = block_diag_(k, k);
            if (d > 0.0) ++result.positive;
            else if (d < 0.0) ++result.negative;
            else ++result.zero;
            k += 1;
        } else {
            // A 2x2 Bunch-Kaufman pivot has negative determinant: one eigenvalue of each sign.
            const Eigen::Matrix2d d = block_diag_.block<2, 2>(k, k);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(d, Eigen::EigenvaluesOnly);
            for (int i = 0; i < 2; ++i) {
                const double v = eig.eigenvalues()(i);
                if (v > 0.0) ++result.positive;
                else if (v < 0.0) ++result.negative;
                else ++result.zero;
            }
            k += 2;
        }
    }
    return result;
}

}  // namespace shapederiv
