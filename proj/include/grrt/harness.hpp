#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grrt/greedy.hpp"
#include "grrt/grrt.hpp"
#include "grrt/linalg.hpp"

namespace grrt {

enum class Algorithm { Omp, Somp, Bomp, BmmvOmp, Lasso };
enum class DesignKind { HadamardIdentity, Gaussian };
enum class SelectorKind {
    KnownSparsityAware,  // run exactly k_block steps
    NoiseNormAware,      // stop once the residual reaches the realized noise norm
    SigmaAware,          // stop once the residual reaches the sigma bound
    Grrt,                // threshold selection, one instance per alpha
    LassoFixedLambda,    // fixed-lambda baseline with LS re-estimation
};

std::string to_string(Algorithm a);
std::string to_string(SelectorKind s);
Algorithm algorithm_from_string(const std::string& s);

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::Omp;
    DesignKind design = DesignKind::HadamardIdentity;
    int n = 64;
    int p = 128;
    int L = 1;
    int block_len = 1;
    int k_block = 6;              // nonzero blocks (rows when block_len = 1)
    std::vector<double> snr_db = {10.0};
    bool noiseless = false;       // sigma = 0; snr grid replaced by one point
    int trials = 1000;
    std::uint64_t seed = 1;
    std::vector<double> alphas = {0.01};
    int max_steps = 0;            // 0: default rule
    bool l_dependent_max_steps = false;
    FallbackPolicy fallback = FallbackPolicy::EmptySupport;
    int workers = 1;

    Scenario scenario() const { return {L, block_len}; }
    int k_row() const { return k_block * block_len; }
    int resolved_max_steps() const;
    // Throws ConfigError on inconsistent settings.
    void validate() const;
};

// Parses a key = value configuration file ('#' starts a comment).  Unknown
// keys are rejected.  See README for the schema.
ExperimentConfig load_config(const std::string& path);

struct SignalInstance {
    Eigen::MatrixXd signal;          // p x L
    std::vector<int> row_support;    // sorted, 1-based
    std::vector<int> block_support;  // sorted, 1-based
    Eigen::MatrixXd observation;     // n x L: X * signal + noise
    double sigma = 0.0;
    double noise_norm = 0.0;         // realized Frobenius norm of the noise
};

// [I_n, H_n/sqrt(n)] with H_n the Sylvester Hadamard matrix; n must be a
// power of two.  Columns are unit norm and the mutual coherence is 1/sqrt(n).
DesignMatrix hadamard_identity_design(int n, int block_len = 1);

// Design selected by the config; Gaussian entries are drawn from `rng`.
DesignMatrix make_design(const ExperimentConfig& config, std::mt19937_64& rng);

// Draws the block support uniformly without replacement, assigns each
// nonzero entry +-1, sets sigma = sqrt(k_row / (n * 10^(snr_db/10))) (0 when
// noiseless), and adds i.i.d. Gaussian noise.
SignalInstance sample_instance(const ExperimentConfig& config,
                               const DesignMatrix& X, double snr_db,
                               std::mt19937_64& rng);

// Support read off a shared RunToKmax trace by one of the oracle rules.
struct OracleSelection {
    int k = 0;                    // selected step (0 = empty support)
    bool flagged = false;         // no step qualified: last step returned
    std::vector<int> row_support; // sorted, 1-based
};
OracleSelection select_known_sparsity(const SupportTrace& trace, int k_block);
// Smallest k (k = 0 allowed) with ||R^k||_F <= threshold.
OracleSelection select_residual_threshold(const SupportTrace& trace,
                                          double threshold);

struct KsReport {
    double distance = 0.0;
    double critical_1pct = 0.0;
    int samples = 0;
    bool pass = false;
};

// Draws standard Gaussian n x L noise, projects it onto fixed nested
// supports S1 (k1 columns) and S2 (k2 columns) of the Hadamard+identity
// design, and compares the squared-residual-norm ratio against the
// Beta((n-k2)L/2, (k2-k1)L/2) law by the Kolmogorov-Smirnov distance.
KsReport validate_residual_ratio_law(int n, int L, int k1, int k2,
                                     int num_samples, std::uint64_t seed);

struct MetricRow {
    std::string scenario;
    std::string algorithm;
    std::string selector;
    double alpha = 0.0;      // meaningful only when has_alpha
    bool has_alpha = false;
    double snr_db = 0.0;
    bool noiseless = false;
    int trials = 0;
    double pe = 0.0;
    double mse = 0.0;
    double mean_k_selected = 0.0;
    double fallback_rate = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<MetricRow> rows;
};

// Runs trials per SNR point in parallel (config.workers threads), reducing
// metrics in fixed trial order so the output is byte-identical for any
// worker count.  Per-trial randomness comes from trial_stream(seed, snr
// index, trial index) only.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Renders the metric table in the results CSV schema:
// scenario,algorithm,selector,alpha,snr_db,trials,pe,mse,mean_k_selected,fallback_rate
std::string metrics_csv(const ExperimentResult& result);

std::string scenario_name(Scenario sc);

}  // namespace grrt
