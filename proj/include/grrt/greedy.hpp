#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "grrt/errors.hpp"
#include "grrt/linalg.hpp"

namespace grrt {

// Problem shape: L measurement vectors, blocks of l_b rows.
//   L=1, l_b=1  -> single measurement vector (plain OMP)
//   L>1, l_b=1  -> multiple measurement vectors (SOMP)
//   L=1, l_b>1  -> block sparsity (BOMP)
//   L>1, l_b>1  -> both (BMMV-OMP)
struct Scenario {
    int L = 1;
    int block_len = 1;
};

enum class StopKind { KnownSparsity, NoiseNorm, SigmaBound, RunToKmax };

struct StoppingRule {
    StopKind kind = StopKind::RunToKmax;
    int target_steps = 0;     // KnownSparsity
    double threshold = 0.0;   // NoiseNorm: realized noise norm; SigmaBound: bound

    static StoppingRule known_sparsity(int k_block) {
        return {StopKind::KnownSparsity, k_block, 0.0};
    }
    static StoppingRule noise_norm(double w_norm) {
        return {StopKind::NoiseNorm, 0, w_norm};
    }
    static StoppingRule sigma_bound(double epsilon) {
        return {StopKind::SigmaBound, 0, epsilon};
    }
    static StoppingRule run_to_kmax() { return {StopKind::RunToKmax, 0, 0.0}; }
};

// Record of a greedy run (or of any nested support sequence with unit or
// block increments): cumulative supports, residual norms and ratios.
// residual_norms[k] is ||R^k||_F with residual_norms[0] = ||Y||_F;
// residual_ratios[k-1] is RR(k) = ||R^k||_F / ||R^{k-1}||_F.
struct SupportTrace {
    Scenario scenario;
    std::vector<int> block_picks;                  // 1-based block per step
    std::vector<std::vector<int>> block_supports;  // cumulative, sorted
    std::vector<std::vector<int>> row_supports;    // cumulative, sorted
    std::vector<double> residual_norms;
    std::vector<double> residual_ratios;
    bool truncated_rank = false;       // stopped early on a rank failure
    bool truncated_exact_fit = false;  // stopped early on a zero residual

    int steps() const { return static_cast<int>(block_picks.size()); }
};

// Rank failure inside run_greedy under a rule that cannot absorb it; carries
// the partial trace accumulated so far.
struct GreedyRankError : RankError {
    SupportTrace partial;
    GreedyRankError(const RankError& cause, SupportTrace trace)
        : RankError(cause.what(), cause.columns), partial(std::move(trace)) {}
};

// Returns the 1-based block index maximizing ||X[:,I_j]^T R_prev||_F over
// non-excluded blocks (the Frobenius norm specializes to the absolute value
// for L=1, l_b=1 and to the vector l2 norm when exactly one of L, l_b is 1).
// Ties break toward the lowest index.  Throws DomainError when every block
// is excluded.
int correlation_select(const Eigen::MatrixXd& R_prev, const DesignMatrix& X,
                       std::span<const int> excluded_blocks);

// Generic greedy pursuit: repeatedly select the most correlated block,
// extend the least-squares fit, and record the residual trajectory.  Stops
// when `rule` fires or after max_steps iterations, whichever happens first.
// A numerically zero residual also stops the run (the trace is flagged);
// further iterations would select on a zero correlation vector.
// Under RunToKmax a rank failure truncates the trace; under the other rules
// it throws GreedyRankError carrying the partial trace.
SupportTrace run_greedy(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                        Scenario scenario, StoppingRule rule, int max_steps);

// Residual trajectory along an externally supplied nested support sequence
// (one new 1-based variable per step, e.g. an aggregated path).  Same
// truncation behavior as run_greedy under RunToKmax.
SupportTrace residual_profile(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                              std::span<const int> appearance_order);

}  // namespace grrt
