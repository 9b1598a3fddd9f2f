#include "grrt/grrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grrt/errors.hpp"
#include "grrt/specfun.hpp"

namespace grrt {

int candidate_count(int k, int p, Scenario scenario, PosRule rule) {
    if (rule == PosRule::SingleCandidate) return 1;
    const int p_b = p / scenario.block_len;
    return p_b - k + 1;
}

ThresholdProfile threshold_profile(int n, int p, Scenario scenario, double alpha,
                                   int max_steps, PosRule rule) {
    const int lb = scenario.block_len;
    if (n < 1 || p < 1 || scenario.L < 1 || lb < 1)
        throw ConfigError("threshold_profile: dimensions must be positive");
    if (p % lb != 0)
        throw ConfigError("threshold_profile: block length does not divide p");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("threshold_profile: alpha must lie in (0,1), got " +
                          std::to_string(alpha));
    if (max_steps < 1)
        throw ConfigError("threshold_profile: max_steps must be positive");
    if (max_steps * lb >= n)
        throw ConfigError(
            "threshold_profile: max_steps*l_b = " + std::to_string(max_steps * lb) +
            " leaves no degrees of freedom (need < n = " + std::to_string(n) + ")");
    if (rule == PosRule::FullDictionary && max_steps > p / lb)
        throw ConfigError("threshold_profile: max_steps exceeds the block count " +
                          std::to_string(p / lb));

    ThresholdProfile prof;
    prof.alpha = alpha;
    prof.max_steps = max_steps;
    prof.n = n;
    prof.p = p;
    prof.scenario = scenario;
    prof.pos_rule = rule;
    prof.thresholds.reserve(static_cast<std::size_t>(max_steps));
    const double b = lb * scenario.L / 2.0;
    for (int k = 1; k <= max_steps; ++k) {
        const double a = (n - lb * k) * scenario.L / 2.0;
        const double q =
            alpha / (static_cast<double>(candidate_count(k, p, scenario, rule)) *
                     max_steps);
        prof.thresholds.push_back(std::sqrt(beta_inv_cdf(a, b, q)));
    }
    return prof;
}

int select_index(std::span<const double> ratios,
                 std::span<const double> thresholds) {
    const int len = static_cast<int>(std::min(ratios.size(), thresholds.size()));
    for (int k = len; k >= 1; --k)
        if (ratios[static_cast<std::size_t>(k - 1)] <
            thresholds[static_cast<std::size_t>(k - 1)])
            return k;
    return 0;
}

SelectionResult select_support(const SupportTrace& trace,
                               const ThresholdProfile& profile,
                               const Eigen::MatrixXd& Y, const DesignMatrix& X,
                               FallbackPolicy policy) {
    if (trace.steps() < 1)
        throw EmptyTraceError("select_support: trace holds no steps");
    if (trace.steps() > profile.max_steps)
        throw ConfigError("select_support: trace has " +
                          std::to_string(trace.steps()) +
                          " steps but the profile allows " +
                          std::to_string(profile.max_steps));
    if (trace.scenario.L != profile.scenario.L ||
        trace.scenario.block_len != profile.scenario.block_len)
        throw ConfigError("select_support: trace and profile scenarios differ");

    SelectionResult res;
    res.ratios = trace.residual_ratios;
    res.thresholds = profile.thresholds;

    int k = select_index(trace.residual_ratios, profile.thresholds);
    if (k == 0) {
        res.fallback = true;
        if (policy == FallbackPolicy::EmptySupport) {
            res.estimate = Eigen::MatrixXd::Zero(X.p(), Y.cols());
            return res;
        }
        double best = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= trace.steps() && i <= profile.max_steps; ++i) {
            const double g = profile.thresholds[static_cast<std::size_t>(i - 1)];
            const double ratio =
                trace.residual_ratios[static_cast<std::size_t>(i - 1)] / g;
            if (ratio < best) {
                best = ratio;
                k = i;
            }
        }
    }

    res.selected_steps = k;
    res.row_support = trace.row_supports[static_cast<std::size_t>(k - 1)];
    res.block_support = trace.block_supports[static_cast<std::size_t>(k - 1)];
    res.estimate = ls_estimate(Y, X, res.row_support);
    return res;
}

int default_max_steps(int n, int block_len) {
    if (block_len < 1) throw ConfigError("default_max_steps: block length must be positive");
    if (n < 2 * block_len)
        throw ConfigError("default_max_steps: need n >= 2*l_b, got n = " +
                          std::to_string(n) + ", l_b = " + std::to_string(block_len));
    return (n + 1) / (2 * block_len);
}

int default_max_steps_l_dependent(int n, int L, int block_len) {
    if (block_len < 1 || L < 1)
        throw ConfigError("default_max_steps_l_dependent: dimensions must be positive");
    if (n < 2 * block_len)
        throw ConfigError("default_max_steps_l_dependent: need n >= 2*l_b");
    return (n + L) / (2 * block_len);
}

}  // namespace grrt
