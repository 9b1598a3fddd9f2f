#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace grrt {

// Column-normalized design matrix with optional block structure.
// Block j (1-based) covers columns {(j-1)*block_len + 1, ..., j*block_len},
// also 1-based, matching the index convention used throughout the library.
class DesignMatrix {
  public:
    // Normalizes every column to unit Euclidean norm.  Throws DomainError on
    // a zero column (naming it) and ConfigError when block_len does not
    // divide the column count.
    explicit DesignMatrix(Eigen::MatrixXd entries, int block_len = 1);

    const Eigen::MatrixXd& entries() const { return entries_; }
    int n() const { return static_cast<int>(entries_.rows()); }
    int p() const { return static_cast<int>(entries_.cols()); }
    int block_len() const { return block_len_; }
    int block_count() const { return p() / block_len_; }

    // 1-based column indices of 1-based block j.
    std::vector<int> block_columns(int block) const;

    // Largest |original norm - 1| seen during normalization (for warnings).
    double normalization_shift() const { return normalization_shift_; }

  private:
    Eigen::MatrixXd entries_;
    int block_len_;
    double normalization_shift_ = 0.0;
};

// Incrementally grown thin QR factorization of X[:, S] together with the
// projected residual (I - P(S))Y.  Single-owner mutable state: one instance
// per trial, never shared across threads.
class LsFactorization {
  public:
    LsFactorization(const Eigen::MatrixXd& Y, const DesignMatrix& X);

    // Adds columns (1-based indices) to S.  Throws RankError when a new
    // column's component orthogonal to the current span has norm below
    // 1e-10 (columns are unit norm, so the absolute tolerance is meaningful).
    void extend(std::span<const int> new_cols);

    const Eigen::MatrixXd& residual() const { return resid_; }
    double residual_norm() const { return resid_.norm(); }

    // Coefficients of the least-squares fit, one row per support column in
    // insertion order.
    Eigen::MatrixXd coefficients() const;

    // p x L matrix with the least-squares rows scattered into place.
    Eigen::MatrixXd full_estimate() const;

    const std::vector<int>& support() const { return support_; }
    int rank() const { return static_cast<int>(support_.size()); }

  private:
    const DesignMatrix* X_;
    Eigen::MatrixXd Y_;
    Eigen::MatrixXd Q_;          // n x m, orthonormal
    Eigen::MatrixXd R_;          // m x m, upper triangular
    Eigen::MatrixXd qty_;        // m x L, Q^T Y
    Eigen::MatrixXd resid_;      // n x L, (I - QQ^T) Y
    std::vector<int> support_;   // 1-based column ids, insertion order
};

// Least-squares signal estimate: rows in `support` (1-based) hold
// X[:,S]^dagger Y, all other rows are zero.
Eigen::MatrixXd ls_estimate(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                            std::span<const int> support);

// Projection residual (I - P(S)) Y.
Eigen::MatrixXd residual(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                         std::span<const int> support);

}  // namespace grrt
