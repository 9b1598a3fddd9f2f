#include "grrt/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "grrt/errors.hpp"

namespace grrt {

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& path,
                              int lineno) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string cell = line.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const char* begin = cell.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        while (end && *end == ' ') ++end;
        if (end == begin || (end && *end != '\0'))
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": cannot parse '" + cell + "' as a number");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Skip blank lines (commonly a trailing newline).
        std::size_t nonspace = line.find_first_not_of(" \t");
        if (nonspace == std::string::npos) continue;
        rows.push_back(parse_row(line, path, lineno));
        if (rows.size() > 1 && rows.back().size() != rows.front().size())
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected " + std::to_string(rows.front().size()) +
                             " columns, got " + std::to_string(rows.back().size()));
    }
    if (rows.empty()) throw ParseError(path + ": file holds no data");

    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_full(m(i, j));
        }
        out << '\n';
    }
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace grrt
