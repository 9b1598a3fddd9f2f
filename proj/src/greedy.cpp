#include "grrt/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grrt {

namespace {

constexpr double kExactFitRelTol = 1e-12;

void append_step(SupportTrace& trace, const DesignMatrix& X, int block,
                 double resid_norm) {
    trace.block_picks.push_back(block);

    std::vector<int> blocks =
        trace.block_supports.empty() ? std::vector<int>{} : trace.block_supports.back();
    blocks.push_back(block);
    std::sort(blocks.begin(), blocks.end());
    trace.block_supports.push_back(std::move(blocks));

    std::vector<int> rows =
        trace.row_supports.empty() ? std::vector<int>{} : trace.row_supports.back();
    for (int c : X.block_columns(block)) rows.push_back(c);
    std::sort(rows.begin(), rows.end());
    trace.row_supports.push_back(std::move(rows));

    const double prev = trace.residual_norms.back();
    trace.residual_norms.push_back(resid_norm);
    trace.residual_ratios.push_back(prev > 0.0 ? resid_norm / prev : 0.0);
}

}  // namespace

int correlation_select(const Eigen::MatrixXd& R_prev, const DesignMatrix& X,
                       std::span<const int> excluded_blocks) {
    if (R_prev.rows() != X.entries().rows())
        throw ConfigError("correlation_select: residual row count mismatch");

    std::vector<char> excluded(static_cast<std::size_t>(X.block_count()) + 1, 0);
    for (int b : excluded_blocks) {
        if (b >= 1 && b <= X.block_count()) excluded[static_cast<std::size_t>(b)] = 1;
    }

    const Eigen::MatrixXd corr = X.entries().transpose() * R_prev;
    int best = 0;
    double best_norm = -1.0;
    const int lb = X.block_len();
    for (int j = 1; j <= X.block_count(); ++j) {
        if (excluded[static_cast<std::size_t>(j)]) continue;
        const double nrm = corr.block((j - 1) * lb, 0, lb, corr.cols()).norm();
        if (nrm > best_norm) {
            best_norm = nrm;
            best = j;
        }
    }
    if (best == 0)
        throw DomainError("correlation_select: every block is excluded");
    return best;
}

SupportTrace run_greedy(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                        Scenario scenario, StoppingRule rule, int max_steps) {
    if (scenario.L < 1 || scenario.block_len < 1)
        throw ConfigError("run_greedy: scenario dimensions must be positive");
    if (Y.cols() != scenario.L)
        throw ConfigError("run_greedy: Y has " + std::to_string(Y.cols()) +
                          " columns, scenario expects L=" +
                          std::to_string(scenario.L));
    if (X.block_len() != scenario.block_len)
        throw ConfigError("run_greedy: design block length " +
                          std::to_string(X.block_len()) +
                          " does not match scenario l_b=" +
                          std::to_string(scenario.block_len));
    if (max_steps < 1)
        throw ConfigError("run_greedy: max_steps must be positive");
    if (max_steps * scenario.block_len > X.n())
        throw ConfigError("run_greedy: max_steps*l_b = " +
                          std::to_string(max_steps * scenario.block_len) +
                          " exceeds n = " + std::to_string(X.n()));
    switch (rule.kind) {
        case StopKind::KnownSparsity:
            if (rule.target_steps < 1 || rule.target_steps > max_steps)
                throw ConfigError("run_greedy: known-sparsity step count " +
                                  std::to_string(rule.target_steps) +
                                  " outside 1.." + std::to_string(max_steps));
            break;
        case StopKind::NoiseNorm:
        case StopKind::SigmaBound:
            if (!(rule.threshold >= 0.0))
                throw ConfigError("run_greedy: stopping threshold must be nonnegative");
            break;
        case StopKind::RunToKmax:
            break;
    }

    SupportTrace trace;
    trace.scenario = scenario;
    LsFactorization fac(Y, X);
    const double y_norm = fac.residual_norm();
    trace.residual_norms.push_back(y_norm);

    const bool threshold_rule =
        rule.kind == StopKind::NoiseNorm || rule.kind == StopKind::SigmaBound;

    while (true) {
        const double cur = fac.residual_norm();
        if (threshold_rule && cur < rule.threshold) break;
        if (rule.kind == StopKind::KnownSparsity &&
            trace.steps() == rule.target_steps)
            break;
        if (trace.steps() == max_steps) break;
        if (cur <= kExactFitRelTol * y_norm) {
            trace.truncated_exact_fit = true;
            break;
        }

        const int block = correlation_select(
            fac.residual(), X,
            trace.block_supports.empty() ? std::span<const int>{}
                                         : std::span<const int>(trace.block_supports.back()));
        const std::vector<int> cols = X.block_columns(block);
        try {
            fac.extend(cols);
        } catch (const RankError& e) {
            if (rule.kind == StopKind::RunToKmax) {
                trace.truncated_rank = true;
                break;
            }
            throw GreedyRankError(e, trace);
        }
        append_step(trace, X, block, fac.residual_norm());
    }
    return trace;
}

SupportTrace residual_profile(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                              std::span<const int> appearance_order) {
    SupportTrace trace;
    trace.scenario = Scenario{static_cast<int>(Y.cols()), 1};
    LsFactorization fac(Y, X);
    const double y_norm = fac.residual_norm();
    trace.residual_norms.push_back(y_norm);

    for (int var : appearance_order) {
        if (fac.residual_norm() <= kExactFitRelTol * y_norm) {
            trace.truncated_exact_fit = true;
            break;
        }
        try {
            fac.extend(std::span<const int>(&var, 1));
        } catch (const RankError&) {
            trace.truncated_rank = true;
            break;
        }
        // With l_b = 1, every variable is its own block.
        std::vector<int> rows =
            trace.row_supports.empty() ? std::vector<int>{} : trace.row_supports.back();
        rows.push_back(var);
        std::sort(rows.begin(), rows.end());
        trace.block_picks.push_back(var);
        trace.block_supports.push_back(rows);
        trace.row_supports.push_back(std::move(rows));

        const double prev = trace.residual_norms.back();
        const double cur = fac.residual_norm();
        trace.residual_norms.push_back(cur);
        trace.residual_ratios.push_back(prev > 0.0 ? cur / prev : 0.0);
    }
    return trace;
}

}  // namespace grrt
