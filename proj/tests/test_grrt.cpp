#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "grrt/errors.hpp"
#include "grrt/grrt.hpp"
#include "grrt/harness.hpp"
#include "grrt/rng.hpp"
#include "grrt/specfun.hpp"
#include "oracles.hpp"

using grrt::candidate_count;
using grrt::default_max_steps;
using grrt::DesignMatrix;
using grrt::FallbackPolicy;
using grrt::PosRule;
using grrt::Scenario;
using grrt::select_index;
using grrt::select_support;
using grrt::SupportTrace;
using grrt::threshold_profile;
using grrt::ThresholdProfile;

namespace {

// Quantile-sequence reference for n=64, p=128, L=1, l_b=1, alpha=0.01,
// 32 steps, computed by 250-step bisection on a 60-digit Beta CDF.
constexpr double kGolden64[32] = {
    0.83723669665782786057, 0.83492523416509498737, 0.83254494033268701765,
    0.83009267733041789094, 0.8275651138454937138,  0.82495870998715263079,
    0.82226970076247583097, 0.81949407796401202607, 0.8166275702893667281,
    0.81366562148943085932, 0.81060336631497472825, 0.80743560400034010438,
    0.80415676898724771915, 0.80076089855049791213, 0.7972415969396264827,
    0.79359199559525422898, 0.78980470893458848321, 0.78587178512568795764,
    0.78178465118276214343, 0.77753405161263472082, 0.77310997972278509624,
    0.76850160056075982924, 0.76369716428920166263, 0.75868390860543712966,
    0.75344794858365174164, 0.74797415204411005837, 0.74224599822912967563,
    0.73624541717932019488, 0.72995260674358298929, 0.72334582360769636451,
    0.7164011440712764124,  0.7090921895205529718,
};

std::vector<int> random_support(int p, int k, std::mt19937_64& rng) {
    std::vector<int> all(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j + 1;
    std::vector<int> out;
    std::sample(all.begin(), all.end(), std::back_inserter(out), k, rng);
    return out;
}

Eigen::MatrixXd planted_observation(const DesignMatrix& X,
                                    const std::vector<int>& support,
                                    double sigma, std::mt19937_64& rng,
                                    Eigen::MatrixXd* signal_out = nullptr) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(X.p(), 1);
    for (int j : support) signal(j - 1, 0) = coin(rng) ? 1.0 : -1.0;
    Eigen::MatrixXd Y = X.entries() * signal;
    if (sigma > 0.0)
        for (int i = 0; i < X.n(); ++i) Y(i, 0) += sigma * gauss(rng);
    if (signal_out) *signal_out = signal;
    return Y;
}

bool covers(const std::vector<int>& sorted_super, const std::vector<int>& sorted_sub) {
    return std::includes(sorted_super.begin(), sorted_super.end(),
                         sorted_sub.begin(), sorted_sub.end());
}

}  // namespace

TEST_CASE("threshold sequence matches the high-precision reference") {
    const ThresholdProfile prof =
        threshold_profile(64, 128, Scenario{1, 1}, 0.01, 32);
    REQUIRE(prof.thresholds.size() == 32);
    for (int k = 1; k <= 32; ++k)
        CHECK(std::fabs(prof.thresholds[static_cast<std::size_t>(k - 1)] -
                        kGolden64[k - 1]) <= 1e-9);
}

TEST_CASE("threshold formula wiring for block and MMV shapes") {
    // Gamma(k)^2 must equal the Beta quantile with the block/MMV degrees of
    // freedom and the per-step candidate count.
    const int n = 64, p = 128, L = 5, lb = 4, kmax = 6;
    const double alpha = 0.05;
    const ThresholdProfile prof =
        threshold_profile(n, p, Scenario{L, lb}, alpha, kmax);
    for (int k = 1; k <= kmax; ++k) {
        const double a = (n - lb * k) * L / 2.0;
        const double b = lb * L / 2.0;
        const int pos = p / lb - k + 1;
        const double q = alpha / (pos * kmax);
        const double expected = std::sqrt(grrt::beta_inv_cdf(a, b, q));
        CHECK(prof.thresholds[static_cast<std::size_t>(k - 1)] ==
              doctest::Approx(expected).epsilon(1e-14));
        CHECK(candidate_count(k, p, Scenario{L, lb}, PosRule::FullDictionary) == pos);
    }
}

TEST_CASE("candidate counts") {
    CHECK(candidate_count(1, 128, Scenario{1, 1}, PosRule::FullDictionary) == 128);
    CHECK(candidate_count(5, 128, Scenario{1, 1}, PosRule::FullDictionary) == 124);
    CHECK(candidate_count(1, 128, Scenario{1, 4}, PosRule::FullDictionary) == 32);
    CHECK(candidate_count(3, 128, Scenario{1, 4}, PosRule::FullDictionary) == 30);
    // The count depends on blocks, not measurement vectors.
    CHECK(candidate_count(3, 128, Scenario{7, 4}, PosRule::FullDictionary) == 30);
    CHECK(candidate_count(3, 128, Scenario{1, 1}, PosRule::SingleCandidate) == 1);
    CHECK(candidate_count(9, 128, Scenario{5, 4}, PosRule::SingleCandidate) == 1);
}

TEST_CASE("thresholds grow with alpha and with the single-candidate rule") {
    const ThresholdProfile lo = threshold_profile(64, 128, Scenario{1, 1}, 0.01, 16);
    const ThresholdProfile mid = threshold_profile(64, 128, Scenario{1, 1}, 0.1, 16);
    const ThresholdProfile hi = threshold_profile(64, 128, Scenario{1, 1}, 0.5, 16);
    const ThresholdProfile single = threshold_profile(
        64, 128, Scenario{1, 1}, 0.01, 16, PosRule::SingleCandidate);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(lo.thresholds[i] > 0.0);
        CHECK(hi.thresholds[i] < 1.0);
        CHECK(lo.thresholds[i] < mid.thresholds[i]);
        CHECK(mid.thresholds[i] < hi.thresholds[i]);
        CHECK(single.thresholds[i] > lo.thresholds[i]);
    }
}

TEST_CASE("threshold profile rejects bad parameters") {
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 1}, 0.0, 8),
                    grrt::ConfigError);
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 1}, 1.0, 8),
                    grrt::ConfigError);
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 1}, -0.5, 8),
                    grrt::ConfigError);
    // max_steps * l_b must stay below n.
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 1}, 0.1, 64),
                    grrt::ConfigError);
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 4}, 0.1, 16),
                    grrt::ConfigError);
    CHECK_THROWS_AS(threshold_profile(64, 128, Scenario{1, 1}, 0.1, 0),
                    grrt::ConfigError);
    // More steps than blocks is unsatisfiable.
    CHECK_THROWS_AS(threshold_profile(64, 24, Scenario{1, 4}, 0.1, 7),
                    grrt::ConfigError);
}

TEST_CASE("select_index keeps the last qualifying step") {
    const std::vector<double> thr(4, 0.5);
    CHECK(select_index(std::vector<double>{0.2, 0.9, 0.3, 0.95}, thr) == 3);
    CHECK(select_index(std::vector<double>{0.2, 0.3, 0.4, 0.45}, thr) == 4);
    CHECK(select_index(std::vector<double>{0.9, 0.8, 0.7, 0.95}, thr) == 0);
    // Equality does not qualify: the rule is strict.
    CHECK(select_index(std::vector<double>{0.5, 0.5, 0.5, 0.5}, thr) == 0);
    CHECK(select_index(std::vector<double>{0.4, 0.5, 0.5, 0.5}, thr) == 1);
    // A short trace is evaluated over its available steps.
    CHECK(select_index(std::vector<double>{0.9, 0.4}, thr) == 2);
    CHECK(select_index(std::vector<double>{}, thr) == 0);
}

TEST_CASE("select_support re-estimates on the selected support") {
    std::mt19937_64 rng(71);
    const DesignMatrix X = grrt::hadamard_identity_design(16);
    const std::vector<int> support = random_support(32, 2, rng);
    const Eigen::MatrixXd Y = planted_observation(X, support, 0.05, rng);
    const SupportTrace trace = grrt::run_greedy(
        Y, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), 6);
    const ThresholdProfile prof = threshold_profile(16, 32, Scenario{1, 1}, 0.1, 6);
    const grrt::SelectionResult res = select_support(trace, prof, Y, X);

    CHECK(res.thresholds == prof.thresholds);
    CHECK(res.ratios == trace.residual_ratios);
    REQUIRE(res.selected_steps >= 1);
    CHECK(!res.fallback);
    const std::size_t idx = static_cast<std::size_t>(res.selected_steps - 1);
    CHECK(res.row_support == trace.row_supports[idx]);
    CHECK(res.block_support == trace.block_supports[idx]);
    const Eigen::MatrixXd ref = grrt::ls_estimate(Y, X, res.row_support);
    CHECK((res.estimate - ref).norm() == 0.0);
}

TEST_CASE("select_support fallbacks when no ratio qualifies") {
    // Fabricated trace with known ratios; thresholds below every ratio.
    SupportTrace trace;
    trace.scenario = Scenario{1, 1};
    trace.block_picks = {1, 2};
    trace.block_supports = {{1}, {1, 2}};
    trace.row_supports = {{1}, {1, 2}};
    trace.residual_norms = {1.0, 0.5, 0.25};
    trace.residual_ratios = {0.5, 0.5};

    ThresholdProfile prof = threshold_profile(16, 4, Scenario{1, 1}, 0.1, 2);
    prof.thresholds = {0.25, 0.2};  // both ratios above

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(16, 4);
    for (int j = 0; j < 4; ++j) M(j, j) = 1.0;
    const DesignMatrix X(M);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(16, 1);
    Y(0, 0) = 1.0;
    Y(1, 0) = 0.75;

    const grrt::SelectionResult empty =
        select_support(trace, prof, Y, X, FallbackPolicy::EmptySupport);
    CHECK(empty.fallback);
    CHECK(empty.selected_steps == 0);
    CHECK(empty.row_support.empty());
    CHECK(empty.estimate.rows() == 4);
    CHECK(empty.estimate.norm() == 0.0);

    // rr/Gamma = {2.0, 2.5}: the minimum sits at step 1.
    const grrt::SelectionResult ranked =
        select_support(trace, prof, Y, X, FallbackPolicy::MinRatioOverThreshold);
    CHECK(ranked.fallback);
    CHECK(ranked.selected_steps == 1);
    CHECK(ranked.row_support == std::vector<int>{1});
    const std::vector<int> first_row{1};
    CHECK((ranked.estimate - grrt::ls_estimate(Y, X, first_row)).norm() == 0.0);

    // Exact tie in rr/Gamma resolves to the smaller step.
    prof.thresholds = {0.25, 0.25};
    const grrt::SelectionResult tied =
        select_support(trace, prof, Y, X, FallbackPolicy::MinRatioOverThreshold);
    CHECK(tied.selected_steps == 1);
}

TEST_CASE("select_support validates trace against profile") {
    std::mt19937_64 rng(72);
    const DesignMatrix X = grrt::hadamard_identity_design(16);
    const Eigen::MatrixXd Y =
        planted_observation(X, random_support(32, 2, rng), 0.05, rng);
    const SupportTrace trace = grrt::run_greedy(
        Y, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), 6);

    const ThresholdProfile too_short =
        threshold_profile(16, 32, Scenario{1, 1}, 0.1, 4);
    CHECK_THROWS_AS(select_support(trace, too_short, Y, X), grrt::ConfigError);

    ThresholdProfile wrong_shape = threshold_profile(16, 32, Scenario{2, 1}, 0.1, 6);
    CHECK_THROWS_AS(select_support(trace, wrong_shape, Y, X), grrt::ConfigError);

    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(16, 1);
    const SupportTrace empty_trace = grrt::run_greedy(
        Z, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), 6);
    REQUIRE(empty_trace.steps() == 0);
    const ThresholdProfile prof = threshold_profile(16, 32, Scenario{1, 1}, 0.1, 6);
    CHECK_THROWS_AS(select_support(empty_trace, prof, Z, X), grrt::EmptyTraceError);
}

TEST_CASE("step budget defaults") {
    CHECK(default_max_steps(64, 1) == 32);
    CHECK(default_max_steps(64, 4) == 8);
    CHECK(default_max_steps(65, 1) == 33);
    CHECK(default_max_steps(2, 1) == 1);
    CHECK_THROWS_AS(default_max_steps(1, 1), grrt::ConfigError);
    CHECK_THROWS_AS(default_max_steps(7, 4), grrt::ConfigError);
    CHECK(grrt::default_max_steps_l_dependent(64, 10, 1) == 37);
    CHECK(grrt::default_max_steps_l_dependent(64, 10, 4) == 9);
    CHECK(grrt::default_max_steps_l_dependent(64, 1, 1) == 32);
}

TEST_CASE("noiseless recovery without knowing the sparsity") {
    // Coherence 1/8 guarantees exact greedy recovery for k <= 4; the
    // residual then vanishes and the last ratio sits far below its
    // threshold, so the selection returns exactly the planted support.
    const DesignMatrix X = grrt::hadamard_identity_design(64);
    const int kmax = default_max_steps(64, 1);
    const ThresholdProfile prof =
        threshold_profile(64, 128, Scenario{1, 1}, 0.01, kmax);
    for (int t = 0; t < 50; ++t) {
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(t));
        const std::vector<int> support = random_support(128, 4, rng);
        Eigen::MatrixXd signal;
        const Eigen::MatrixXd Y = planted_observation(X, support, 0.0, rng, &signal);
        const SupportTrace trace = grrt::run_greedy(
            Y, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), kmax);
        CHECK(trace.truncated_exact_fit);
        const grrt::SelectionResult res = select_support(trace, prof, Y, X);
        CHECK(!res.fallback);
        CHECK(res.row_support == support);
        CHECK((res.estimate - signal).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("false-continuation rate stays near the design level") {
    // Over random noisy instances, the probability that any ratio past the
    // first true-support cover falls to its threshold is at most alpha.
    // 500 trials at alpha = 0.1: a binomial bound of alpha + 4 sigma gives
    // 0.1 + 4*sqrt(0.1*0.9/500) = 0.154.
    const int n = 64, p = 128, k_row = 6, kmax = 32, trials = 500;
    const double alpha = 0.1;
    const double sigma = std::sqrt(k_row / (n * 10.0));  // 10 dB with unit rows
    const DesignMatrix X = grrt::hadamard_identity_design(n);
    const ThresholdProfile prof =
        threshold_profile(n, p, Scenario{1, 1}, alpha, kmax);

    int violations = 0;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng = grrt::trial_stream(9001, 0, static_cast<std::uint64_t>(t));
        const std::vector<int> support = random_support(p, k_row, rng);
        const Eigen::MatrixXd Y = planted_observation(X, support, sigma, rng);
        const SupportTrace trace = grrt::run_greedy(
            Y, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), kmax);
        int k_min = 0;
        for (int k = 1; k <= trace.steps(); ++k)
            if (covers(trace.row_supports[static_cast<std::size_t>(k - 1)], support)) {
                k_min = k;
                break;
            }
        if (k_min == 0) continue;  // support never covered: nothing to violate
        for (int k = k_min + 1; k <= trace.steps(); ++k)
            if (trace.residual_ratios[static_cast<std::size_t>(k - 1)] <=
                prof.thresholds[static_cast<std::size_t>(k - 1)]) {
                ++violations;
                break;
            }
    }
    const double rate = static_cast<double>(violations) / trials;
    CHECK(rate <= 0.154);
}

TEST_CASE("ratios past the cover concentrate near one at high SNR") {
    const int n = 64, p = 128, k_row = 6, trials = 200;
    const double sigma = std::sqrt(k_row / (n * 1e4));  // 40 dB
    const DesignMatrix X = grrt::hadamard_identity_design(n);
    std::vector<double> tail_ratios;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng = grrt::trial_stream(9002, 0, static_cast<std::uint64_t>(t));
        const std::vector<int> support = random_support(p, k_row, rng);
        const Eigen::MatrixXd Y = planted_observation(X, support, sigma, rng);
        const SupportTrace trace = grrt::run_greedy(
            Y, X, Scenario{1, 1}, grrt::StoppingRule::run_to_kmax(), 12);
        int k_min = 0;
        for (int k = 1; k <= trace.steps(); ++k)
            if (covers(trace.row_supports[static_cast<std::size_t>(k - 1)], support)) {
                k_min = k;
                break;
            }
        if (k_min == 0) continue;
        for (int k = k_min + 1; k <= trace.steps(); ++k)
            tail_ratios.push_back(
                trace.residual_ratios[static_cast<std::size_t>(k - 1)]);
    }
    REQUIRE(tail_ratios.size() > 500);
    std::sort(tail_ratios.begin(), tail_ratios.end());
    const double median = tail_ratios[tail_ratios.size() / 2];
    CHECK(median > 0.9);
}
