#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "grrt/greedy.hpp"
#include "grrt/linalg.hpp"

namespace grrt {

// One breakpoint of the piecewise-linear solution path of
//     min_D ||Y - X D||^2 + lambda * ||D||_1.
// `coefficients` is the full solution at exactly this lambda; the entering
// variable therefore still has coefficient zero at its own knot.
struct Knot {
    double lambda = 0.0;
    int variable = 0;      // 1-based; 0 marks the terminal segment endpoint
    bool entering = true;  // false: the variable left the active set
    std::vector<int> active;  // sorted, 1-based, after the event
    Eigen::VectorXd coefficients;
};

struct KnotSequence {
    int p = 0;
    std::vector<Knot> knots;  // lambda strictly decreasing
    bool reached_max_active = false;
    bool stopped_at_tie = false;  // only with TiePolicy::Stop
    bool empty() const { return knots.empty(); }
};

// Coincident path events make the next segment ill-defined.  Throw is the
// honest default for solver use; Stop truncates the path at the last
// well-defined knot, which batch drivers prefer over losing a whole run.
enum class TiePolicy { Throw, Stop };

struct PathOptions {
    int max_active = 0;        // 0: min(n, p)
    double lambda_stop = -1.0; // >= 0: stop once a knot reaches this lambda
    int max_distinct = 0;      // > 0: stop once this many distinct variables appeared
    double tie_rel_tol = 1e-10;
    TiePolicy on_tie = TiePolicy::Throw;
};

// Computes the solution path from lambda_1 downward by LARS with the lasso
// modification (coefficients crossing zero leave the active set).  With the
// un-halved quadratic objective above, a variable j is active exactly while
// |x_j^T (Y - X D)| = lambda / 2, so knots occur at lambda = 2 * correlation.
// Throws TieError when two path events coincide within tie_rel_tol.
KnotSequence lasso_path(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                        PathOptions opts = {});
inline KnotSequence lasso_path(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                               int max_active) {
    PathOptions o;
    o.max_active = max_active;
    return lasso_path(Y, X, o);
}

// Solution at an arbitrary lambda by affine interpolation between the
// bracketing knots.  Above the first knot the solution is identically zero;
// below the last computed knot the query is an ExtrapolationError.
Eigen::VectorXd solution_at_lambda(const KnotSequence& path, double lambda);

// Active set of each knot, in path order (for aggregation).
std::vector<std::vector<int>> knot_supports(const KnotSequence& path);

// Monotonic support sequence obtained by first-appearance deduplication of
// an arbitrary support sequence.
struct AggregatedSequence {
    std::vector<int> appearance_order;       // first k_max distinct variables
    std::vector<std::vector<int>> supports;  // sorted cumulative prefixes
};

// Flattens the input sets in order (each set iterated ascending), keeps the
// first appearance of every index, and returns the first k_max of them as a
// nested sequence.  Throws InsufficientVariablesError when fewer than k_max
// distinct indices exist, reporting the achievable length.
AggregatedSequence aggregate_supports(std::span<const std::vector<int>> supports,
                                      int k_max);

// Residual norms and ratios along an aggregated sequence.
SupportTrace aggregated_trace(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                              const AggregatedSequence& agg);

// Fixed-lambda baseline: support of the path solution at
// lambda = 2*sigma*sqrt(10*ln p), re-estimated by least squares.
struct FixedLambdaResult {
    double lambda = 0.0;
    std::vector<int> support;  // sorted, 1-based
    Eigen::MatrixXd estimate;  // p x 1
};
FixedLambdaResult lasso_fixed_lambda_baseline(const Eigen::MatrixXd& Y,
                                              const DesignMatrix& X,
                                              double sigma);

// Same extraction from an already-computed path (must reach lambda).
FixedLambdaResult fixed_lambda_from_path(const KnotSequence& path,
                                         const Eigen::MatrixXd& Y,
                                         const DesignMatrix& X, double lambda);

}  // namespace grrt
