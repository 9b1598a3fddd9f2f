// Command-line front end: experiment runs, single-instance solves, LASSO path
// tracing, residual-ratio distribution validation and threshold tables.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grrt/csv.hpp"
#include "grrt/errors.hpp"
#include "grrt/grrt.hpp"
#include "grrt/harness.hpp"
#include "grrt/lasso.hpp"
#include "grrt/linalg.hpp"

namespace {

std::string join_indices(const std::vector<int>& idx) {
    std::string out = "{";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(idx[i]);
    }
    out += "}";
    return out;
}

void check_scenario_flag(const std::string& name, int L, int lb) {
    if (name.empty()) return;
    const bool multi = L > 1, block = lb > 1;
    bool ok = false;
    if (name == "smv") ok = !multi && !block;
    else if (name == "mmv") ok = multi && !block;
    else if (name == "bsmv") ok = !multi && block;
    else if (name == "bmmv") ok = multi && block;
    else throw grrt::ConfigError("unknown scenario '" + name + "'");
    if (!ok)
        throw grrt::ConfigError("scenario '" + name + "' conflicts with L=" +
                                std::to_string(L) + ", lb=" + std::to_string(lb));
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw grrt::Error("cannot open output file " + path);
    out << body;
}

grrt::DesignMatrix load_design(const std::string& path, int lb) {
    Eigen::MatrixXd M = grrt::read_matrix_csv(path);
    grrt::DesignMatrix X(std::move(M), lb);
    if (X.normalization_shift() > 1e-6)
        std::cerr << "warning: columns of " << path
                  << " were renormalized (largest norm deviation "
                  << X.normalization_shift() << ")\n";
    return X;
}

int cmd_run_experiment(const std::string& config_path, const std::string& out_path,
                       std::uint64_t seed, int trials, int workers,
                       const std::vector<double>& alphas,
                       const std::vector<double>& snrs) {
    grrt::ExperimentConfig cfg = grrt::load_config(config_path);
    if (seed != 0) cfg.seed = seed;
    if (trials > 0) cfg.trials = trials;
    if (workers > 0) cfg.workers = workers;
    if (!alphas.empty()) cfg.alphas = alphas;
    if (!snrs.empty()) cfg.snr_db = snrs;

    const grrt::ExperimentResult result = grrt::run_experiment(cfg);
    write_text_file(out_path, grrt::metrics_csv(result));
    std::cout << "wrote " << result.rows.size() << " metric rows to " << out_path
              << "\n";
    return 0;
}

int cmd_solve(const std::string& matrix_path, const std::string& obs_path,
              const std::string& algorithm_name, double alpha, int kmax, int lb,
              int L_flag, const std::string& scenario_flag,
              const std::string& fallback_flag, const std::string& out_path,
              const std::string& diag_path) {
    const grrt::DesignMatrix X = load_design(matrix_path, lb);
    const Eigen::MatrixXd Y = grrt::read_matrix_csv(obs_path);
    if (Y.rows() != X.n())
        throw grrt::ConfigError("observation has " + std::to_string(Y.rows()) +
                                " rows but the matrix has " + std::to_string(X.n()));
    const int L = static_cast<int>(Y.cols());
    if (L_flag > 0 && L_flag != L)
        throw grrt::ConfigError("--L " + std::to_string(L_flag) +
                                " conflicts with the observation (" +
                                std::to_string(L) + " columns)");
    check_scenario_flag(scenario_flag, L, lb);
    const grrt::Algorithm algo = grrt::algorithm_from_string(algorithm_name);
    if (algo == grrt::Algorithm::Lasso && (L > 1 || lb > 1))
        throw grrt::ConfigError("lasso handles a single observation column, lb=1");

    grrt::FallbackPolicy policy = grrt::FallbackPolicy::EmptySupport;
    if (fallback_flag == "min-ratio")
        policy = grrt::FallbackPolicy::MinRatioOverThreshold;
    else if (fallback_flag != "empty")
        throw grrt::ConfigError("--fallback is empty|min-ratio");

    const grrt::Scenario sc{L, lb};
    const int steps = kmax > 0 ? kmax : grrt::default_max_steps(X.n(), lb);

    if (Y.norm() == 0.0) {
        std::cout << "observation is identically zero; fallback engaged\n";
        std::cout << "selected k: 0\nrow support: {}\n";
        if (!out_path.empty())
            grrt::write_matrix_csv(out_path, Eigen::MatrixXd::Zero(X.p(), L));
        return 2;
    }

    grrt::SupportTrace trace;
    if (algo == grrt::Algorithm::Lasso) {
        grrt::PathOptions opts;
        opts.max_distinct = steps;
        const grrt::KnotSequence path = grrt::lasso_path(Y, X, opts);
        const auto supports = grrt::knot_supports(path);
        try {
            trace = grrt::aggregated_trace(Y, X,
                                           grrt::aggregate_supports(supports, steps));
        } catch (const grrt::InsufficientVariablesError& e) {
            if (e.achievable > 0)
                trace = grrt::aggregated_trace(
                    Y, X, grrt::aggregate_supports(supports, e.achievable));
        }
    } else {
        trace = grrt::run_greedy(Y, X, sc, grrt::StoppingRule::run_to_kmax(), steps);
    }

    const grrt::ThresholdProfile profile = grrt::threshold_profile(
        X.n(), X.p(), algo == grrt::Algorithm::Lasso ? grrt::Scenario{1, 1} : sc,
        alpha, steps);

    grrt::SelectionResult res;
    try {
        res = grrt::select_support(trace, profile, Y, X, policy);
    } catch (const grrt::EmptyTraceError&) {
        std::cout << "empty support trace; fallback engaged\n";
        std::cout << "selected k: 0\nrow support: {}\n";
        if (!out_path.empty())
            grrt::write_matrix_csv(out_path, Eigen::MatrixXd::Zero(X.p(), L));
        return 2;
    }

    std::cout << "algorithm: " << to_string(algo) << "\n";
    std::cout << "scenario: " << grrt::scenario_name(sc) << "  (L=" << L
              << ", lb=" << lb << ")\n";
    std::cout << "alpha: " << alpha << "  k_max: " << steps
              << "  trace length: " << trace.steps() << "\n";
    std::printf("%4s %16s %12s %12s\n", "k", "residual_norm", "ratio", "threshold");
    std::printf("%4d %16.8g %12s %12s\n", 0, trace.residual_norms[0], "-", "-");
    for (int k = 1; k <= trace.steps(); ++k) {
        const double rr = trace.residual_ratios[static_cast<std::size_t>(k - 1)];
        const double g = profile.thresholds[static_cast<std::size_t>(k - 1)];
        std::printf("%4d %16.8g %12.8g %12.8g%s\n", k,
                    trace.residual_norms[static_cast<std::size_t>(k)], rr, g,
                    k == res.selected_steps ? "  <- selected" : "");
    }
    if (res.fallback) std::cout << "no ratio fell below its threshold; fallback engaged\n";
    std::cout << "selected k: " << res.selected_steps << "\n";
    if (lb > 1) std::cout << "block support: " << join_indices(res.block_support) << "\n";
    std::cout << "row support: " << join_indices(res.row_support) << "\n";

    if (!out_path.empty()) grrt::write_matrix_csv(out_path, res.estimate);
    if (!diag_path.empty()) {
        Eigen::MatrixXd D(trace.steps(), 4);
        for (int k = 1; k <= trace.steps(); ++k) {
            D(k - 1, 0) = k;
            D(k - 1, 1) = trace.residual_norms[static_cast<std::size_t>(k)];
            D(k - 1, 2) = trace.residual_ratios[static_cast<std::size_t>(k - 1)];
            D(k - 1, 3) = profile.thresholds[static_cast<std::size_t>(k - 1)];
        }
        grrt::write_matrix_csv(diag_path, D);
    }
    return res.fallback ? 2 : 0;
}

int cmd_trace_path(const std::string& matrix_path, const std::string& obs_path,
                   const std::string& out_path, int max_active,
                   double lambda_stop) {
    const grrt::DesignMatrix X = load_design(matrix_path, 1);
    const Eigen::MatrixXd Y = grrt::read_matrix_csv(obs_path);
    if (Y.rows() != X.n())
        throw grrt::ConfigError("observation has " + std::to_string(Y.rows()) +
                                " rows but the matrix has " + std::to_string(X.n()));
    if (Y.cols() != 1)
        throw grrt::ConfigError("trace-path expects a single observation column");

    grrt::PathOptions opts;
    opts.max_active = max_active;
    opts.lambda_stop = lambda_stop;
    const grrt::KnotSequence path = grrt::lasso_path(Y, X, opts);
    std::cout << "knots: " << path.knots.size() << "\n";
    std::printf("%4s %18s %8s %s\n", "i", "lambda", "event", "active");
    for (std::size_t i = 0; i < path.knots.size(); ++i) {
        const grrt::Knot& kn = path.knots[i];
        std::string event = "end";
        if (kn.variable != 0)
            event = (kn.entering ? "+" : "-") + std::to_string(kn.variable);
        std::printf("%4zu %18.10g %8s %s\n", i + 1, kn.lambda, event.c_str(),
                    join_indices(kn.active).c_str());
    }
    if (path.reached_max_active)
        std::cout << "stopped at the active-set cap before lambda reached 0\n";

    if (!out_path.empty()) {
        Eigen::MatrixXd M(static_cast<Eigen::Index>(path.knots.size()), path.p + 1);
        for (std::size_t i = 0; i < path.knots.size(); ++i) {
            M(static_cast<Eigen::Index>(i), 0) = path.knots[i].lambda;
            for (int j = 0; j < path.p; ++j)
                M(static_cast<Eigen::Index>(i), j + 1) = path.knots[i].coefficients[j];
        }
        grrt::write_matrix_csv(out_path, M);
    }
    return 0;
}

int cmd_validate_dist(int n, int L, int k1, int k2, int samples,
                      std::uint64_t seed) {
    const grrt::KsReport rep =
        grrt::validate_residual_ratio_law(n, L, k1, k2, samples, seed);
    std::printf("samples: %d\n", rep.samples);
    std::printf("ks distance: %.8g\n", rep.distance);
    std::printf("critical value (1%% level): %.8g\n", rep.critical_1pct);
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

int cmd_gamma_table(int n, int p, int L, int lb, const std::string& scenario_flag,
                    double alpha, int kmax) {
    if (p == 0) p = 2 * n;
    check_scenario_flag(scenario_flag, L, lb);
    const grrt::Scenario sc{L, lb};
    const int steps = kmax > 0 ? kmax : grrt::default_max_steps(n, lb);
    const grrt::ThresholdProfile profile =
        grrt::threshold_profile(n, p, sc, alpha, steps);
    std::printf("%4s %10s %10s %8s %20s\n", "k", "dof_a", "dof_b", "pos", "gamma");
    for (int k = 1; k <= steps; ++k) {
        const double a = (n - lb * k) * L / 2.0;
        const double b = lb * L / 2.0;
        const int pos = grrt::candidate_count(k, p, sc, profile.pos_rule);
        std::printf("%4d %10.4g %10.4g %8d %20.15g\n", k, a, b, pos,
                    profile.thresholds[static_cast<std::size_t>(k - 1)]);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse recovery with residual-ratio thresholding"};
    app.require_subcommand(1);

    // run-experiment
    std::string config_path, out_path;
    std::uint64_t seed = 0;
    int trials = 0, workers = 0;
    std::vector<double> alphas, snrs;
    CLI::App* run = app.add_subcommand("run-experiment",
                                       "run a Monte Carlo experiment from a config file");
    run->add_option("--config", config_path, "experiment config (key = value lines)")
        ->required();
    run->add_option("--out", out_path, "metrics CSV output path")->required();
    run->add_option("--seed", seed, "override the master seed");
    run->add_option("--trials", trials, "override the trial count");
    run->add_option("--workers", workers, "override the worker count");
    run->add_option("--alpha", alphas, "override alpha values (repeatable)");
    run->add_option("--snr-db", snrs, "override SNR grid in dB (repeatable)");

    // solve
    std::string matrix_path, obs_path, algorithm = "omp", scenario, fallback = "empty";
    std::string solve_out, solve_diag;
    double alpha = 0.01;
    int kmax = 0, lb = 1, L_flag = 0;
    CLI::App* solve = app.add_subcommand("solve",
                                         "select a support for one observation");
    solve->add_option("--matrix", matrix_path, "design matrix CSV")->required();
    solve->add_option("--observation", obs_path, "observation CSV")->required();
    solve->add_option("--algorithm", algorithm, "omp|somp|bomp|bmmv-omp|lasso");
    solve->add_option("--alpha", alpha, "confidence parameter in (0,1)");
    solve->add_option("--kmax", kmax, "maximum steps (0 = default rule)");
    solve->add_option("--lb", lb, "block length");
    solve->add_option("--L", L_flag, "observation columns (checked against the file)");
    solve->add_option("--scenario", scenario, "smv|mmv|bsmv|bmmv (consistency check)");
    solve->add_option("--fallback", fallback, "empty|min-ratio");
    solve->add_option("--out", solve_out, "write the coefficient estimate CSV here");
    solve->add_option("--diag", solve_diag, "write k,residual,ratio,threshold CSV here");

    // trace-path
    std::string tp_matrix, tp_obs, tp_out;
    int tp_max_active = 0;
    double tp_lambda_stop = -1.0;
    CLI::App* tp = app.add_subcommand("trace-path",
                                      "print the full regularization path");
    tp->add_option("--matrix", tp_matrix, "design matrix CSV")->required();
    tp->add_option("--observation", tp_obs, "observation CSV (one column)")->required();
    tp->add_option("--out", tp_out, "write lambda + coefficients per knot here");
    tp->add_option("--max-active", tp_max_active,
                   "stop once this many variables are active (0 = min(n,p))");
    tp->add_option("--lambda-stop", tp_lambda_stop,
                   "stop once lambda falls to this value (-1 = trace to 0)");

    // validate-dist
    int vd_n = 64, vd_L = 1, vd_k1 = 0, vd_k2 = 0, vd_samples = 10000;
    std::uint64_t vd_seed = 1;
    CLI::App* vd = app.add_subcommand("validate-dist",
                                      "test the nested residual ratio law");
    vd->add_option("--n", vd_n, "rows (power of two)");
    vd->add_option("--L", vd_L, "observation columns");
    vd->add_option("--k1", vd_k1, "inner support size")->required();
    vd->add_option("--k2", vd_k2, "outer support size")->required();
    vd->add_option("--samples", vd_samples, "Monte Carlo samples");
    vd->add_option("--seed", vd_seed, "RNG seed");

    // gamma-table
    int gt_n = 64, gt_p = 0, gt_L = 1, gt_lb = 1, gt_kmax = 0;
    double gt_alpha = 0.01;
    std::string gt_scenario;
    CLI::App* gt = app.add_subcommand("gamma-table",
                                      "print the threshold sequence");
    gt->add_option("--n", gt_n, "rows");
    gt->add_option("--p", gt_p, "columns (0 = 2n)");
    gt->add_option("--L", gt_L, "observation columns");
    gt->add_option("--lb", gt_lb, "block length");
    gt->add_option("--scenario", gt_scenario, "smv|mmv|bsmv|bmmv (consistency check)");
    gt->add_option("--alpha", gt_alpha, "confidence parameter in (0,1)");
    gt->add_option("--kmax", gt_kmax, "steps (0 = default rule)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run_experiment(config_path, out_path, seed, trials, workers,
                                      alphas, snrs);
        if (solve->parsed())
            return cmd_solve(matrix_path, obs_path, algorithm, alpha, kmax, lb,
                             L_flag, scenario, fallback, solve_out, solve_diag);
        if (tp->parsed())
            return cmd_trace_path(tp_matrix, tp_obs, tp_out, tp_max_active,
                                  tp_lambda_stop);
        if (vd->parsed())
            return cmd_validate_dist(vd_n, vd_L, vd_k1, vd_k2, vd_samples, vd_seed);
        if (gt->parsed())
            return cmd_gamma_table(gt_n, gt_p, gt_L, gt_lb, gt_scenario, gt_alpha,
                                   gt_kmax);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
