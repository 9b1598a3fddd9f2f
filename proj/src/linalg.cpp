#include "grrt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grrt/errors.hpp"

namespace grrt {

DesignMatrix::DesignMatrix(Eigen::MatrixXd entries, int block_len)
    : entries_(std::move(entries)), block_len_(block_len) {
    if (entries_.rows() < 1 || entries_.cols() < 1)
        throw ConfigError("DesignMatrix: matrix must be non-empty");
    if (block_len_ < 1)
        throw ConfigError("DesignMatrix: block length must be positive");
    if (entries_.cols() % block_len_ != 0)
        throw ConfigError("DesignMatrix: block length " +
                          std::to_string(block_len_) + " does not divide " +
                          std::to_string(entries_.cols()) + " columns");
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
        const double norm = entries_.col(j).norm();
        if (norm < 1e-300)
            throw DomainError("DesignMatrix: column " + std::to_string(j + 1) +
                              " is zero and cannot be normalized");
        normalization_shift_ =
            std::max(normalization_shift_, std::fabs(norm - 1.0));
        entries_.col(j) /= norm;
    }
}

std::vector<int> DesignMatrix::block_columns(int block) const {
    if (block < 1 || block > block_count())
        throw DomainError("DesignMatrix: block index " + std::to_string(block) +
                          " outside 1.." + std::to_string(block_count()));
    std::vector<int> cols(static_cast<std::size_t>(block_len_));
    for (int i = 0; i < block_len_; ++i) cols[static_cast<std::size_t>(i)] = (block - 1) * block_len_ + 1 + i;
    return cols;
}

LsFactorization::LsFactorization(const Eigen::MatrixXd& Y, const DesignMatrix& X)
    : X_(&X), Y_(Y), resid_(Y) {
    if (Y.rows() != X.entries().rows())
        throw ConfigError("LsFactorization: Y has " + std::to_string(Y.rows()) +
                          " rows but the design has " +
                          std::to_string(X.entries().rows()));
    Q_.resize(Y.rows(), 0);
    R_.resize(0, 0);
    qty_.resize(0, Y.cols());
}

void LsFactorization::extend(std::span<const int> new_cols) {
    constexpr double kRankTol = 1e-10;
    for (int col : new_cols) {
        if (col < 1 || col > X_->p())
            throw DomainError("LsFactorization: column index " +
                              std::to_string(col) + " outside 1.." +
                              std::to_string(X_->p()));
        if (std::find(support_.begin(), support_.end(), col) != support_.end()) {
            std::vector<int> offending = support_;
            offending.push_back(col);
            throw RankError("LsFactorization: column " + std::to_string(col) +
                                " already selected",
                            std::move(offending));
        }

        const Eigen::Index m = Q_.cols();
        Eigen::VectorXd v = X_->entries().col(col - 1);
        Eigen::VectorXd h = Eigen::VectorXd::Zero(m);
        if (m > 0) {
            // Gram-Schmidt with one reorthogonalization pass.
            Eigen::VectorXd h1 = Q_.transpose() * v;
            v.noalias() -= Q_ * h1;
            Eigen::VectorXd h2 = Q_.transpose() * v;
            v.noalias() -= Q_ * h2;
            h = h1 + h2;
        }
        const double nrm = v.norm();
        if (nrm < kRankTol) {
            std::vector<int> offending = support_;
            offending.push_back(col);
            throw RankError(
                "LsFactorization: column " + std::to_string(col) +
                    " is numerically in the span of the current selection",
                std::move(offending));
        }
        v /= nrm;

        Q_.conservativeResize(Eigen::NoChange, m + 1);
        Q_.col(m) = v;
        R_.conservativeResize(m + 1, m + 1);
        if (m > 0) {
            R_.block(0, m, m, 1) = h;
            R_.block(m, 0, 1, m).setZero();
        }
        R_(m, m) = nrm;

        // v is orthogonal to the previous span, so v^T resid = v^T Y.
        Eigen::RowVectorXd t = v.transpose() * resid_;
        qty_.conservativeResize(m + 1, Eigen::NoChange);
        qty_.row(m) = t;
        resid_.noalias() -= v * t;

        support_.push_back(col);
    }
}

Eigen::MatrixXd LsFactorization::coefficients() const {
    if (support_.empty()) return Eigen::MatrixXd::Zero(0, Y_.cols());
    return R_.triangularView<Eigen::Upper>().solve(qty_);
}

Eigen::MatrixXd LsFactorization::full_estimate() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X_->p(), Y_.cols());
    const Eigen::MatrixXd coef = coefficients();
    for (std::size_t i = 0; i < support_.size(); ++i)
        out.row(support_[i] - 1) = coef.row(static_cast<Eigen::Index>(i));
    return out;
}

Eigen::MatrixXd ls_estimate(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                            std::span<const int> support) {
    LsFactorization f(Y, X);
    f.extend(support);
    return f.full_estimate();
}

Eigen::MatrixXd residual(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                         std::span<const int> support) {
    LsFactorization f(Y, X);
    f.extend(support);
    return f.residual();
}

}  // namespace grrt
