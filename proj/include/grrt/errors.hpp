#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace grrt {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric argument (out-of-range parameter, bad probability, ...).
struct DomainError : Error {
    using Error::Error;
};

// Inconsistent or unsatisfiable configuration.
struct ConfigError : Error {
    using Error::Error;
};

// A least-squares subproblem became (numerically) rank deficient.
// `columns` holds the 1-based column indices of the offending set.
struct RankError : Error {
    std::vector<int> columns;
    RankError(const std::string& msg, std::vector<int> cols)
        : Error(msg), columns(std::move(cols)) {}
};

// Two path events coincide within tolerance; the path order is ambiguous.
struct TieError : Error {
    std::vector<int> variables;  // 1-based variables involved in the tie
    double lambda = 0.0;
    TieError(const std::string& msg, std::vector<int> vars, double lam)
        : Error(msg), variables(std::move(vars)), lambda(lam) {}
};

// A query landed outside the computed part of a regularization path.
struct ExtrapolationError : Error {
    using Error::Error;
};

// Fewer distinct variables are available than were requested.
struct InsufficientVariablesError : Error {
    int achievable = 0;
    InsufficientVariablesError(const std::string& msg, int got)
        : Error(msg), achievable(got) {}
};

// A selection was requested on a trace with no steps.
struct EmptyTraceError : Error {
    using Error::Error;
};

// Malformed input file.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace grrt
