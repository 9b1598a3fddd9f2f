#include "grrt/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grrt/errors.hpp"

namespace grrt {

namespace {

// The path is driven on the correlation scale mu = lambda / 2: active
// variables satisfy x_j^T r = mu * sign(D_j).

struct Candidate {
    double mu = -1.0;
    int variable = 0;
    bool entering = true;
    double sign = 0.0;  // sign the variable enters with
};

void record_knot(KnotSequence& seq, double mu, int variable, bool entering,
                 const std::vector<int>& active, const Eigen::VectorXd& beta) {
    Knot k;
    k.lambda = 2.0 * mu;
    k.variable = variable;
    k.entering = entering;
    k.active = active;
    std::sort(k.active.begin(), k.active.end());
    k.coefficients = beta;
    seq.knots.push_back(std::move(k));
}

}  // namespace

KnotSequence lasso_path(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                        PathOptions opts) {
    if (Y.cols() != 1)
        throw DomainError("lasso_path: Y must be a single column (L=1)");
    if (Y.rows() != X.entries().rows())
        throw ConfigError("lasso_path: Y row count does not match the design");
    const int n = X.n();
    const int p = X.p();
    // min(n,p) is a hard ceiling: beyond it the active Gram is singular.  An
    // explicit cap stops the path; the implicit ceiling only blocks entries,
    // since a saturated path can still shed variables and run down to 0.
    const int ceiling = std::min(n, p);
    const bool user_cap = opts.max_active > 0;
    const int max_active = user_cap ? opts.max_active : ceiling;
    if (max_active > ceiling)
        throw ConfigError("lasso_path: max_active " + std::to_string(max_active) +
                          " exceeds min(n,p) = " + std::to_string(ceiling));
    if (!(opts.tie_rel_tol > 0.0))
        throw ConfigError("lasso_path: tie tolerance must be positive");

    KnotSequence seq;
    seq.p = p;

    const Eigen::VectorXd y = Y.col(0);
    std::vector<int> active;          // 1-based, insertion order
    std::vector<double> signs;        // aligned with `active`
    std::vector<char> is_active(static_cast<std::size_t>(p) + 1, 0);
    std::vector<char> appeared(static_cast<std::size_t>(p) + 1, 0);
    int distinct = 0;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

    Eigen::VectorXd c = X.entries().transpose() * y;

    // First knot: largest absolute correlation.
    double mu = 0.0;
    {
        int j_best = 0;
        double best = -1.0, second = -1.0;
        int j_second = 0;
        for (int j = 1; j <= p; ++j) {
            const double a = std::fabs(c(j - 1));
            if (a > best) {
                second = best;
                j_second = j_best;
                best = a;
                j_best = j;
            } else if (a > second) {
                second = a;
                j_second = j;
            }
        }
        if (best <= 0.0) return seq;  // Y orthogonal to every column
        if (second >= 0.0 && best - second <= opts.tie_rel_tol * best) {
            if (opts.on_tie == TiePolicy::Stop) {
                seq.stopped_at_tie = true;
                return seq;
            }
            throw TieError("lasso_path: variables " + std::to_string(j_best) +
                               " and " + std::to_string(j_second) +
                               " enter simultaneously at the first knot",
                           {j_best, j_second}, 2.0 * best);
        }
        mu = best;
        active.push_back(j_best);
        signs.push_back(c(j_best - 1) > 0.0 ? 1.0 : -1.0);
        is_active[static_cast<std::size_t>(j_best)] = 1;
        appeared[static_cast<std::size_t>(j_best)] = 1;
        ++distinct;
        record_knot(seq, mu, j_best, true, active, beta);
    }

    const bool want_distinct = opts.max_distinct > 0;
    const bool want_lambda = opts.lambda_stop >= 0.0;
    auto requested_stop = [&]() {
        if (!want_distinct && !want_lambda) return false;
        if (want_distinct && distinct < opts.max_distinct) return false;
        if (want_lambda && 2.0 * mu > opts.lambda_stop) return false;
        return true;
    };

    if (user_cap && static_cast<int>(active.size()) >= max_active) {
        seq.reached_max_active = true;
        return seq;
    }
    if (requested_stop()) return seq;

    const int knot_cap = 50 * p + 50;
    while (static_cast<int>(seq.knots.size()) < knot_cap) {
        const int m = static_cast<int>(active.size());
        Eigen::VectorXd d;           // direction of active coefficients as mu decreases by 1
        Eigen::VectorXd a;           // X^T X_A d
        if (m > 0) {
            Eigen::MatrixXd XA(n, m);
            Eigen::VectorXd s(m);
            for (int i = 0; i < m; ++i) {
                XA.col(i) = X.entries().col(active[static_cast<std::size_t>(i)] - 1);
                s(i) = signs[static_cast<std::size_t>(i)];
            }
            const Eigen::MatrixXd G = XA.transpose() * XA;
            Eigen::LLT<Eigen::MatrixXd> llt(G);
            if (llt.info() != Eigen::Success)
                throw ConfigError("lasso_path: active set became rank deficient");
            d = llt.solve(s);
            a = X.entries().transpose() * (XA * d);
        }

        // Collect the next event over all variables.
        std::vector<Candidate> cands;
        const double upper = mu * (1.0 - 1e-12);
        if (m == 0) {
            for (int j = 1; j <= p; ++j) {
                const double aj = std::fabs(c(j - 1));
                if (aj > 0.0 && aj < upper)
                    cands.push_back({aj, j, true, c(j - 1) > 0.0 ? 1.0 : -1.0});
            }
        } else {
            // At the ceiling the equiangular direction keeps every inactive
            // correlation balanced, so entries are impossible in exact
            // arithmetic; skipping them avoids spurious roundoff-level roots.
            if (m < ceiling) {
                for (int j = 1; j <= p; ++j) {
                    if (is_active[static_cast<std::size_t>(j)]) continue;
                    const double cj = c(j - 1);
                    const double aj = a(j - 1);
                    const double plus = (cj - mu * aj) / (1.0 - aj);
                    if (std::isfinite(plus) && plus > 0.0 && plus < upper)
                        cands.push_back({plus, j, true, 1.0});
                    const double minus = (mu * aj - cj) / (1.0 + aj);
                    if (std::isfinite(minus) && minus > 0.0 && minus < upper)
                        cands.push_back({minus, j, true, -1.0});
                }
            }
            for (int i = 0; i < m; ++i) {
                const double di = d(i);
                if (di == 0.0) continue;
                const double leave = mu + beta(active[static_cast<std::size_t>(i)] - 1) / di;
                if (std::isfinite(leave) && leave > 0.0 && leave < upper)
                    cands.push_back({leave, active[static_cast<std::size_t>(i)], false, 0.0});
            }
        }

        if (cands.empty()) {
            // No further event: the segment extends to lambda = 0.
            for (int i = 0; i < m; ++i)
                beta(active[static_cast<std::size_t>(i)] - 1) += mu * d(i);
            mu = 0.0;
            record_knot(seq, 0.0, 0, false, active, beta);
            break;
        }

        const Candidate* best = &cands.front();
        for (const Candidate& cand : cands)
            if (cand.mu > best->mu) best = &cand;
        for (const Candidate& cand : cands) {
            if (&cand == best || cand.variable == best->variable) continue;
            if (best->mu - cand.mu <= opts.tie_rel_tol * best->mu) {
                if (opts.on_tie == TiePolicy::Stop) {
                    seq.stopped_at_tie = true;
                    return seq;
                }
                throw TieError("lasso_path: simultaneous events for variables " +
                                   std::to_string(best->variable) + " and " +
                                   std::to_string(cand.variable),
                               {best->variable, cand.variable}, 2.0 * best->mu);
            }
        }

        // Advance the coefficients to the event and apply it.
        const double mu_next = best->mu;
        for (int i = 0; i < m; ++i)
            beta(active[static_cast<std::size_t>(i)] - 1) += (mu - mu_next) * d(i);
        mu = mu_next;
        if (best->entering) {
            active.push_back(best->variable);
            signs.push_back(best->sign);
            is_active[static_cast<std::size_t>(best->variable)] = 1;
            if (!appeared[static_cast<std::size_t>(best->variable)]) {
                appeared[static_cast<std::size_t>(best->variable)] = 1;
                ++distinct;
            }
        } else {
            const auto it = std::find(active.begin(), active.end(), best->variable);
            const auto idx = static_cast<std::size_t>(it - active.begin());
            active.erase(it);
            signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(idx));
            is_active[static_cast<std::size_t>(best->variable)] = 0;
            beta(best->variable - 1) = 0.0;  // crossed zero exactly at the knot
        }
        record_knot(seq, mu, best->variable, best->entering, active, beta);

        // Fresh residual correlations keep the KKT system tight along long paths.
        const Eigen::VectorXd r = y - X.entries() * beta;
        c = X.entries().transpose() * r;

        if (user_cap && static_cast<int>(active.size()) >= max_active) {
            seq.reached_max_active = true;
            break;
        }
        if (requested_stop()) break;
    }
    if (static_cast<int>(seq.knots.size()) >= knot_cap)
        throw Error("lasso_path: knot cap exceeded; path failed to terminate");
    return seq;
}

Eigen::VectorXd solution_at_lambda(const KnotSequence& path, double lambda) {
    if (!(lambda >= 0.0))
        throw DomainError("solution_at_lambda: lambda must be nonnegative");
    if (path.empty()) return Eigen::VectorXd::Zero(path.p);
    if (lambda >= path.knots.front().lambda)
        return Eigen::VectorXd::Zero(path.p);
    if (lambda < path.knots.back().lambda)
        throw ExtrapolationError(
            "solution_at_lambda: lambda = " + std::to_string(lambda) +
            " lies below the computed path end " +
            std::to_string(path.knots.back().lambda));

    std::size_t i = 1;
    while (path.knots[i].lambda > lambda) ++i;
    const Knot& hi = path.knots[i - 1];
    const Knot& lo = path.knots[i];
    const double t = (hi.lambda - lambda) / (hi.lambda - lo.lambda);
    return (1.0 - t) * hi.coefficients + t * lo.coefficients;
}

std::vector<std::vector<int>> knot_supports(const KnotSequence& path) {
    std::vector<std::vector<int>> out;
    out.reserve(path.knots.size());
    for (const Knot& k : path.knots) out.push_back(k.active);
    return out;
}

AggregatedSequence aggregate_supports(std::span<const std::vector<int>> supports,
                                      int k_max) {
    if (k_max < 1)
        throw ConfigError("aggregate_supports: k_max must be positive");
    AggregatedSequence agg;
    std::vector<int> seen;
    for (const std::vector<int>& s : supports) {
        std::vector<int> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        for (int v : sorted) {
            if (std::find(seen.begin(), seen.end(), v) == seen.end())
                seen.push_back(v);
        }
        if (static_cast<int>(seen.size()) >= k_max) break;
    }
    if (static_cast<int>(seen.size()) < k_max)
        throw InsufficientVariablesError(
            "aggregate_supports: only " + std::to_string(seen.size()) +
                " distinct variables available, " + std::to_string(k_max) +
                " requested",
            static_cast<int>(seen.size()));
    seen.resize(static_cast<std::size_t>(k_max));
    agg.appearance_order = seen;
    std::vector<int> prefix;
    for (int k = 0; k < k_max; ++k) {
        prefix.push_back(seen[static_cast<std::size_t>(k)]);
        std::vector<int> sorted = prefix;
        std::sort(sorted.begin(), sorted.end());
        agg.supports.push_back(std::move(sorted));
    }
    return agg;
}

SupportTrace aggregated_trace(const Eigen::MatrixXd& Y, const DesignMatrix& X,
                              const AggregatedSequence& agg) {
    return residual_profile(Y, X, agg.appearance_order);
}

FixedLambdaResult fixed_lambda_from_path(const KnotSequence& path,
                                         const Eigen::MatrixXd& Y,
                                         const DesignMatrix& X, double lambda) {
    FixedLambdaResult res;
    res.lambda = lambda;
    if (path.empty() || lambda >= path.knots.front().lambda) {
        res.estimate = Eigen::MatrixXd::Zero(X.p(), 1);
        return res;
    }
    const Eigen::VectorXd d = solution_at_lambda(path, lambda);
    for (int j = 1; j <= X.p(); ++j)
        if (d(j - 1) != 0.0) res.support.push_back(j);
    res.estimate = ls_estimate(Y, X, res.support);
    return res;
}

FixedLambdaResult lasso_fixed_lambda_baseline(const Eigen::MatrixXd& Y,
                                              const DesignMatrix& X,
                                              double sigma) {
    if (!(sigma > 0.0))
        throw DomainError("lasso_fixed_lambda_baseline: sigma must be positive");
    const double lambda =
        2.0 * sigma * std::sqrt(10.0 * std::log(static_cast<double>(X.p())));
    PathOptions opts;
    opts.lambda_stop = lambda;
    const KnotSequence path = lasso_path(Y, X, opts);
    return fixed_lambda_from_path(path, Y, X, lambda);
}

}  // namespace grrt
