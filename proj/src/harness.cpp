#include "grrt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "grrt/csv.hpp"
#include "grrt/errors.hpp"
#include "grrt/lasso.hpp"
#include "grrt/rng.hpp"
#include "grrt/specfun.hpp"

namespace grrt {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Omp: return "omp";
        case Algorithm::Somp: return "somp";
        case Algorithm::Bomp: return "bomp";
        case Algorithm::BmmvOmp: return "bmmv-omp";
        case Algorithm::Lasso: return "lasso";
    }
    return "?";
}

std::string to_string(SelectorKind s) {
    switch (s) {
        case SelectorKind::KnownSparsityAware: return "k_aware";
        case SelectorKind::NoiseNormAware: return "noise_norm_aware";
        case SelectorKind::SigmaAware: return "sigma_aware";
        case SelectorKind::Grrt: return "grrt";
        case SelectorKind::LassoFixedLambda: return "lasso_fixed_lambda";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "omp") return Algorithm::Omp;
    if (s == "somp") return Algorithm::Somp;
    if (s == "bomp") return Algorithm::Bomp;
    if (s == "bmmv-omp") return Algorithm::BmmvOmp;
    if (s == "lasso") return Algorithm::Lasso;
    throw ConfigError("unknown algorithm '" + s +
                      "' (expected omp|somp|bomp|bmmv-omp|lasso)");
}

std::string scenario_name(Scenario sc) {
    if (sc.block_len == 1) return sc.L == 1 ? "smv" : "mmv";
    return sc.L == 1 ? "bsmv" : "bmmv";
}

int ExperimentConfig::resolved_max_steps() const {
    if (max_steps > 0) return max_steps;
    return l_dependent_max_steps ? default_max_steps_l_dependent(n, L, block_len)
                                 : default_max_steps(n, block_len);
}

void ExperimentConfig::validate() const {
    if (n < 1 || p < 1 || L < 1 || block_len < 1)
        throw ConfigError("config: dimensions must be positive");
    if (p % block_len != 0)
        throw ConfigError("config: lb must divide p");
    if (k_block < 1) throw ConfigError("config: k_block must be positive");
    if (trials < 1) throw ConfigError("config: trials must be positive");
    if (workers < 1) throw ConfigError("config: workers must be positive");
    if (seed == 0) throw ConfigError("config: seed must be nonzero");
    if (alphas.empty()) throw ConfigError("config: at least one alpha required");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0))
            throw ConfigError("config: alpha must lie in (0,1)");
    if (!noiseless && snr_db.empty())
        throw ConfigError("config: SNR grid is empty");

    const bool block = block_len > 1, multi = L > 1;
    switch (algorithm) {
        case Algorithm::Omp:
            if (block || multi) throw ConfigError("config: omp needs L=1, lb=1");
            break;
        case Algorithm::Somp:
            if (block || !multi) throw ConfigError("config: somp needs L>1, lb=1");
            break;
        case Algorithm::Bomp:
            if (!block || multi) throw ConfigError("config: bomp needs L=1, lb>1");
            break;
        case Algorithm::BmmvOmp:
            if (!block || !multi)
                throw ConfigError("config: bmmv-omp needs L>1, lb>1");
            break;
        case Algorithm::Lasso:
            if (block || multi) throw ConfigError("config: lasso needs L=1, lb=1");
            break;
    }
    if (design == DesignKind::HadamardIdentity) {
        if (n < 2 || (n & (n - 1)) != 0)
            throw ConfigError("config: hadamard-identity design needs n = 2^m");
        if (p != 2 * n)
            throw ConfigError("config: hadamard-identity design needs p = 2n");
    }
    const int steps = resolved_max_steps();
    if (k_block > steps)
        throw ConfigError("config: k_block " + std::to_string(k_block) +
                          " exceeds k_max " + std::to_string(steps));
    if (steps * block_len >= n)
        throw ConfigError("config: k_max*lb = " + std::to_string(steps * block_len) +
                          " leaves no degrees of freedom (need < n)");
    if (steps > p / block_len)
        throw ConfigError("config: k_max exceeds the block count");
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "algorithm") {
            cfg.algorithm = algorithm_from_string(val);
        } else if (key == "design") {
            if (val == "hadamard-identity") cfg.design = DesignKind::HadamardIdentity;
            else if (val == "gaussian") cfg.design = DesignKind::Gaussian;
            else throw ConfigError("config: unknown design '" + val + "'");
        } else if (key == "n") {
            cfg.n = static_cast<int>(parse_int(key, val));
        } else if (key == "p") {
            cfg.p = static_cast<int>(parse_int(key, val));
        } else if (key == "L") {
            cfg.L = static_cast<int>(parse_int(key, val));
        } else if (key == "lb") {
            cfg.block_len = static_cast<int>(parse_int(key, val));
        } else if (key == "k_block") {
            cfg.k_block = static_cast<int>(parse_int(key, val));
        } else if (key == "snr_db") {
            cfg.snr_db.clear();
            for (const std::string& item : split_list(val))
                cfg.snr_db.push_back(parse_double(key, item));
        } else if (key == "noiseless") {
            cfg.noiseless = parse_bool(key, val);
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_int(key, val));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
        } else if (key == "alpha") {
            cfg.alphas.clear();
            for (const std::string& item : split_list(val))
                cfg.alphas.push_back(parse_double(key, item));
        } else if (key == "k_max") {
            cfg.max_steps = static_cast<int>(parse_int(key, val));
        } else if (key == "max_steps_rule") {
            if (val == "standard") cfg.l_dependent_max_steps = false;
            else if (val == "l-dependent") cfg.l_dependent_max_steps = true;
            else throw ConfigError("config: max_steps_rule is standard|l-dependent");
        } else if (key == "fallback") {
            if (val == "empty") cfg.fallback = FallbackPolicy::EmptySupport;
            else if (val == "min-ratio") cfg.fallback = FallbackPolicy::MinRatioOverThreshold;
            else throw ConfigError("config: fallback is empty|min-ratio");
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_int(key, val));
        } else {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

DesignMatrix hadamard_identity_design(int n, int block_len) {
    if (n < 2 || (n & (n - 1)) != 0)
        throw ConfigError("hadamard_identity_design: n must be a power of two >= 2");
    Eigen::MatrixXd H(1, 1);
    H(0, 0) = 1.0;
    for (int m = 1; m < n; m *= 2) {
        Eigen::MatrixXd next(2 * m, 2 * m);
        next.topLeftCorner(m, m) = H;
        next.topRightCorner(m, m) = H;
        next.bottomLeftCorner(m, m) = H;
        next.bottomRightCorner(m, m) = -H;
        H = std::move(next);
    }
    Eigen::MatrixXd X(n, 2 * n);
    X.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
    X.rightCols(n) = H / std::sqrt(static_cast<double>(n));
    return DesignMatrix(std::move(X), block_len);
}

DesignMatrix make_design(const ExperimentConfig& config, std::mt19937_64& rng) {
    if (config.design == DesignKind::HadamardIdentity)
        return hadamard_identity_design(config.n, config.block_len);
    Eigen::MatrixXd X(config.n, config.p);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < config.p; ++j)
        for (int i = 0; i < config.n; ++i) X(i, j) = gauss(rng);
    return DesignMatrix(std::move(X), config.block_len);
}

SignalInstance sample_instance(const ExperimentConfig& config,
                               const DesignMatrix& X, double snr_db,
                               std::mt19937_64& rng) {
    SignalInstance inst;
    const int p_b = X.block_count();
    const int L = config.L;

    std::vector<int> all_blocks(static_cast<std::size_t>(p_b));
    for (int j = 0; j < p_b; ++j) all_blocks[static_cast<std::size_t>(j)] = j + 1;
    std::sample(all_blocks.begin(), all_blocks.end(),
                std::back_inserter(inst.block_support),
                static_cast<std::size_t>(config.k_block), rng);
    for (int b : inst.block_support)
        for (int c : X.block_columns(b)) inst.row_support.push_back(c);
    std::sort(inst.row_support.begin(), inst.row_support.end());

    inst.signal = Eigen::MatrixXd::Zero(X.p(), L);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int r : inst.row_support)
        for (int l = 0; l < L; ++l)
            inst.signal(r - 1, l) = coin(rng) == 0 ? -1.0 : 1.0;

    if (config.noiseless) {
        inst.sigma = 0.0;
    } else {
        const double snr_linear = std::pow(10.0, snr_db / 10.0);
        inst.sigma = std::sqrt(config.k_row() / (config.n * snr_linear));
    }

    inst.observation = Eigen::MatrixXd::Zero(X.n(), L);
    for (int r : inst.row_support)
        inst.observation.noalias() +=
            X.entries().col(r - 1) * inst.signal.row(r - 1);
    if (inst.sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd W(X.n(), L);
        for (int l = 0; l < L; ++l)
            for (int i = 0; i < X.n(); ++i) W(i, l) = inst.sigma * gauss(rng);
        inst.noise_norm = W.norm();
        inst.observation += W;
    }
    return inst;
}

OracleSelection select_known_sparsity(const SupportTrace& trace, int k_block) {
    OracleSelection sel;
    if (k_block < 1) throw ConfigError("select_known_sparsity: k_block must be positive");
    if (trace.steps() >= k_block) {
        sel.k = k_block;
    } else {
        sel.k = trace.steps();
        sel.flagged = true;
    }
    if (sel.k > 0) sel.row_support = trace.row_supports[static_cast<std::size_t>(sel.k - 1)];
    return sel;
}

OracleSelection select_residual_threshold(const SupportTrace& trace,
                                          double threshold) {
    OracleSelection sel;
    for (int k = 0; k <= trace.steps(); ++k) {
        if (trace.residual_norms[static_cast<std::size_t>(k)] <= threshold) {
            sel.k = k;
            if (k > 0) sel.row_support = trace.row_supports[static_cast<std::size_t>(k - 1)];
            return sel;
        }
    }
    sel.k = trace.steps();
    sel.flagged = true;
    if (sel.k > 0) sel.row_support = trace.row_supports[static_cast<std::size_t>(sel.k - 1)];
    return sel;
}

KsReport validate_residual_ratio_law(int n, int L, int k1, int k2,
                                     int num_samples, std::uint64_t seed) {
    if (!(0 <= k1 && k1 < k2 && k2 < n))
        throw ConfigError("validate_residual_ratio_law: need 0 <= k1 < k2 < n");
    if (L < 1 || num_samples < 10)
        throw ConfigError("validate_residual_ratio_law: bad L or sample count");

    const DesignMatrix X = hadamard_identity_design(n);
    // Fixed nested supports: k1 Hadamard columns, then identity columns.
    std::vector<int> s1, extra;
    for (int j = 0; j < k1; ++j) s1.push_back(n + 1 + j);
    for (int j = 0; j < k2 - k1; ++j) extra.push_back(1 + j);

    std::mt19937_64 rng(mix64(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> ratios(static_cast<std::size_t>(num_samples));
    Eigen::MatrixXd W(n, L);
    for (int s = 0; s < num_samples; ++s) {
        for (int l = 0; l < L; ++l)
            for (int i = 0; i < n; ++i) W(i, l) = gauss(rng);
        LsFactorization fac(W, X);
        fac.extend(s1);
        const double r1 = fac.residual_norm();
        fac.extend(extra);
        const double r2 = fac.residual_norm();
        ratios[static_cast<std::size_t>(s)] = (r2 * r2) / (r1 * r1);
    }
    std::sort(ratios.begin(), ratios.end());

    const double a = (n - k2) * L / 2.0;
    const double b = (k2 - k1) * L / 2.0;
    double dist = 0.0;
    for (int i = 0; i < num_samples; ++i) {
        const double f = beta_cdf(a, b, ratios[static_cast<std::size_t>(i)]);
        const double lo = static_cast<double>(i) / num_samples;
        const double hi = static_cast<double>(i + 1) / num_samples;
        dist = std::max(dist, std::max(f - lo, hi - f));
    }

    KsReport rep;
    rep.distance = dist;
    rep.samples = num_samples;
    rep.critical_1pct = 1.63 / std::sqrt(static_cast<double>(num_samples));
    rep.pass = dist < rep.critical_1pct;
    return rep;
}

namespace {

struct SelectorSpec {
    SelectorKind kind;
    double alpha = 0.0;       // Grrt only
    std::size_t profile = 0;  // index into the profile list (Grrt only)
};

struct Outcome {
    bool exact = false;
    double sq_err = 0.0;
    int k = 0;
    bool flagged = false;
};

std::vector<SelectorSpec> selector_list(const ExperimentConfig& config) {
    std::vector<SelectorSpec> out;
    out.push_back({SelectorKind::KnownSparsityAware});
    if (config.algorithm != Algorithm::Lasso) {
        out.push_back({SelectorKind::NoiseNormAware});
        out.push_back({SelectorKind::SigmaAware});
    }
    for (std::size_t i = 0; i < config.alphas.size(); ++i)
        out.push_back({SelectorKind::Grrt, config.alphas[i], i});
    if (config.algorithm == Algorithm::Lasso)
        out.push_back({SelectorKind::LassoFixedLambda});
    return out;
}

Outcome score(const SignalInstance& inst, const std::vector<int>& support,
              const Eigen::MatrixXd& estimate, int k, bool flagged, int L) {
    Outcome o;
    o.exact = support == inst.row_support;
    o.sq_err = (inst.signal - estimate).squaredNorm() / L;
    o.k = k;
    o.flagged = flagged;
    return o;
}

std::vector<Outcome> run_trial(const ExperimentConfig& config,
                               const DesignMatrix& X,
                               const std::vector<ThresholdProfile>& profiles,
                               const std::vector<SelectorSpec>& selectors,
                               double snr_db, std::uint64_t snr_index,
                               std::uint64_t trial_index) {
    std::mt19937_64 rng = trial_stream(config.seed, snr_index, trial_index);
    const SignalInstance inst = sample_instance(config, X, snr_db, rng);
    const Eigen::MatrixXd& Y = inst.observation;
    const int max_steps = config.resolved_max_steps();

    SupportTrace trace;
    KnotSequence path;
    if (config.algorithm == Algorithm::Lasso) {
        PathOptions opts;
        opts.max_distinct = max_steps;
        opts.on_tie = TiePolicy::Stop;
        if (inst.sigma > 0.0)
            opts.lambda_stop =
                2.0 * inst.sigma * std::sqrt(10.0 * std::log(static_cast<double>(X.p())));
        path = lasso_path(Y, X, opts);
        const std::vector<std::vector<int>> supports = knot_supports(path);
        try {
            trace = aggregated_trace(Y, X, aggregate_supports(supports, max_steps));
        } catch (const InsufficientVariablesError& e) {
            if (e.achievable > 0)
                trace = aggregated_trace(Y, X,
                                         aggregate_supports(supports, e.achievable));
            else
                trace.scenario = Scenario{1, 1};
        }
    } else {
        trace = run_greedy(Y, X, config.scenario(), StoppingRule::run_to_kmax(),
                           max_steps);
    }

    std::vector<Outcome> outcomes;
    outcomes.reserve(selectors.size());
    for (const SelectorSpec& spec : selectors) {
        switch (spec.kind) {
            case SelectorKind::KnownSparsityAware: {
                const OracleSelection sel = select_known_sparsity(trace, config.k_block);
                outcomes.push_back(score(inst, sel.row_support,
                                         ls_estimate(Y, X, sel.row_support), sel.k,
                                         sel.flagged, config.L));
                break;
            }
            case SelectorKind::NoiseNormAware: {
                const OracleSelection sel =
                    select_residual_threshold(trace, inst.noise_norm);
                outcomes.push_back(score(inst, sel.row_support,
                                         ls_estimate(Y, X, sel.row_support), sel.k,
                                         sel.flagged, config.L));
                break;
            }
            case SelectorKind::SigmaAware: {
                const OracleSelection sel = select_residual_threshold(
                    trace, noise_norm_bound(config.n, config.L, inst.sigma));
                outcomes.push_back(score(inst, sel.row_support,
                                         ls_estimate(Y, X, sel.row_support), sel.k,
                                         sel.flagged, config.L));
                break;
            }
            case SelectorKind::Grrt: {
                Outcome o;
                if (trace.steps() < 1) {
                    o.sq_err = inst.signal.squaredNorm() / config.L;
                    o.flagged = true;
                } else {
                    const SelectionResult res =
                        select_support(trace, profiles[spec.profile], Y, X,
                                       config.fallback);
                    o = score(inst, res.row_support, res.estimate,
                              res.selected_steps, res.fallback, config.L);
                }
                outcomes.push_back(o);
                break;
            }
            case SelectorKind::LassoFixedLambda: {
                const double lambda =
                    2.0 * inst.sigma *
                    std::sqrt(10.0 * std::log(static_cast<double>(X.p())));
                Outcome o;
                try {
                    const FixedLambdaResult fl =
                        fixed_lambda_from_path(path, Y, X, lambda);
                    o = score(inst, fl.support, fl.estimate,
                              static_cast<int>(fl.support.size()), false, config.L);
                } catch (const ExtrapolationError&) {
                    // Path ended above the target lambda; report its endpoint.
                    const std::vector<int>& last = path.knots.back().active;
                    o = score(inst, last, ls_estimate(Y, X, last),
                              static_cast<int>(last.size()), true, config.L);
                }
                outcomes.push_back(o);
                break;
            }
        }
    }
    return outcomes;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::mt19937_64 design_rng = trial_stream(config.seed, 0xffffffffULL, 0);
    const DesignMatrix X = make_design(config, design_rng);
    const int max_steps = config.resolved_max_steps();

    const Scenario trace_scenario = config.algorithm == Algorithm::Lasso
                                        ? Scenario{1, 1}
                                        : config.scenario();
    std::vector<ThresholdProfile> profiles;
    for (double alpha : config.alphas)
        profiles.push_back(threshold_profile(config.n, config.p, trace_scenario,
                                             alpha, max_steps));
    const std::vector<SelectorSpec> selectors = selector_list(config);

    const std::vector<double> snr_grid =
        config.noiseless ? std::vector<double>{0.0} : config.snr_db;

    ExperimentResult result;
    result.config = config;

    for (std::size_t si = 0; si < snr_grid.size(); ++si) {
        const double snr = snr_grid[si];
        std::vector<std::vector<Outcome>> per_trial(
            static_cast<std::size_t>(config.trials));

        const int nworkers = std::min(config.workers, config.trials);
        if (nworkers <= 1) {
            for (int t = 0; t < config.trials; ++t)
                per_trial[static_cast<std::size_t>(t)] =
                    run_trial(config, X, profiles, selectors, snr,
                              static_cast<std::uint64_t>(si),
                              static_cast<std::uint64_t>(t));
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(
                static_cast<std::size_t>(nworkers));
            for (int w = 0; w < nworkers; ++w) {
                pool.emplace_back([&, w]() {
                    try {
                        for (int t = w; t < config.trials; t += nworkers)
                            per_trial[static_cast<std::size_t>(t)] =
                                run_trial(config, X, profiles, selectors, snr,
                                          static_cast<std::uint64_t>(si),
                                          static_cast<std::uint64_t>(t));
                    } catch (...) {
                        errors[static_cast<std::size_t>(w)] = std::current_exception();
                    }
                });
            }
            for (std::thread& th : pool) th.join();
            for (const std::exception_ptr& e : errors)
                if (e) std::rethrow_exception(e);
        }

        // Reduce in fixed trial order: identical bytes for any worker count.
        for (std::size_t s = 0; s < selectors.size(); ++s) {
            double fail = 0.0, sq = 0.0, ks = 0.0, flags = 0.0;
            for (int t = 0; t < config.trials; ++t) {
                const Outcome& o = per_trial[static_cast<std::size_t>(t)][s];
                fail += o.exact ? 0.0 : 1.0;
                sq += o.sq_err;
                ks += o.k;
                flags += o.flagged ? 1.0 : 0.0;
            }
            MetricRow row;
            row.scenario = scenario_name(config.scenario());
            row.algorithm = to_string(config.algorithm);
            row.selector = to_string(selectors[s].kind);
            row.has_alpha = selectors[s].kind == SelectorKind::Grrt;
            row.alpha = selectors[s].alpha;
            row.snr_db = snr;
            row.noiseless = config.noiseless;
            row.trials = config.trials;
            row.pe = fail / config.trials;
            row.mse = sq / config.trials;
            row.mean_k_selected = ks / config.trials;
            row.fallback_rate = flags / config.trials;
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::string metrics_csv(const ExperimentResult& result) {
    std::string out =
        "scenario,algorithm,selector,alpha,snr_db,trials,pe,mse,"
        "mean_k_selected,fallback_rate\n";
    for (const MetricRow& r : result.rows) {
        out += r.scenario;
        out += ',';
        out += r.algorithm;
        out += ',';
        out += r.selector;
        out += ',';
        out += r.has_alpha ? format_metric(r.alpha) : std::string("na");
        out += ',';
        out += r.noiseless ? std::string("inf") : format_metric(r.snr_db);
        out += ',';
        out += std::to_string(r.trials);
        out += ',';
        out += format_metric(r.pe);
        out += ',';
        out += format_metric(r.mse);
        out += ',';
        out += format_metric(r.mean_k_selected);
        out += ',';
        out += format_metric(r.fallback_rate);
        out += '\n';
    }
    return out;
}

}  // namespace grrt
