#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "grrt/greedy.hpp"
#include "grrt/linalg.hpp"

namespace grrt {

// Which union-bound cardinality enters the threshold:
//   FullDictionary: pos(k) = p_b - k + 1 candidate blocks at step k
//                   (p - k + 1 single columns when block_len = 1);
//   SingleCandidate: pos(k) = 1 (model-order-selection mode, where the
//                   support sequence is fixed in advance).
enum class PosRule { FullDictionary, SingleCandidate };

// Deterministic residual-ratio threshold sequence
//   Gamma(k) = sqrt( F^{-1}_{(n - l_b k) L / 2, l_b L / 2} ( alpha / (pos(k) k_max) ) )
// where F is the Beta CDF.  A residual ratio falls below Gamma(k) at any
// step past the minimal true superset with probability at most alpha.
struct ThresholdProfile {
    double alpha = 0.0;
    int max_steps = 0;
    int n = 0;
    int p = 0;
    Scenario scenario;
    PosRule pos_rule = PosRule::FullDictionary;
    std::vector<double> thresholds;  // Gamma(k), k = 1..max_steps
};

// Number of candidate supports at step k under the given rule.
int candidate_count(int k, int p, Scenario scenario, PosRule rule);

// Builds the full threshold sequence.  Requires alpha in (0,1) and
// max_steps * l_b < n (positive degrees of freedom at every step).
ThresholdProfile threshold_profile(int n, int p, Scenario scenario, double alpha,
                                   int max_steps,
                                   PosRule rule = PosRule::FullDictionary);

// Largest step whose ratio is strictly below its threshold; 0 when none is.
int select_index(std::span<const double> ratios,
                 std::span<const double> thresholds);

// What to report when no step qualifies.
enum class FallbackPolicy {
    EmptySupport,           // honest "no signal detected at this level"
    MinRatioOverThreshold,  // argmin_k RR(k)/Gamma(k)
};

struct SelectionResult {
    int selected_steps = 0;  // 0 with the empty-support fallback
    bool fallback = false;
    std::vector<int> row_support;    // sorted, 1-based
    std::vector<int> block_support;  // sorted, 1-based
    Eigen::MatrixXd estimate;        // p x L least-squares re-estimate
    std::vector<double> ratios;      // RR over the evaluated steps
    std::vector<double> thresholds;  // Gamma(1..max_steps)
};

// Applies the selection rule k* = max{k : RR(k) < Gamma(k)} to a trace and
// re-estimates the signal on the selected support.  A trace shorter than
// max_steps (rank or exact-fit truncation) is evaluated over its available
// steps against the same thresholds.
SelectionResult select_support(const SupportTrace& trace,
                               const ThresholdProfile& profile,
                               const Eigen::MatrixXd& Y, const DesignMatrix& X,
                               FallbackPolicy policy = FallbackPolicy::EmptySupport);

// Largest step budget with positive degrees of freedom headroom,
// floor((n + 1) / (2 l_b)); guarantees k_max >= k_block for recoverable
// problems.  Requires n >= 2 l_b.
int default_max_steps(int n, int block_len);

// Variant floor((n + L) / (2 l_b)) available behind a configuration option.
int default_max_steps_l_dependent(int n, int L, int block_len);

}  // namespace grrt
