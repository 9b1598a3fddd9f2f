#pragma once

#include <Eigen/Dense>
#include <string>

namespace grrt {

// Reads a plain CSV file of reals (row-major, no header); dimensions are
// inferred from the file.  Throws ParseError with file/line context on
// malformed input.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Writes a matrix as plain CSV, one row per line, full double precision.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

// Formats a double with enough digits to round-trip ("%.17g").
std::string format_full(double v);

// Shorter human-oriented format ("%.10g") used in metric tables.
std::string format_metric(double v);

}  // namespace grrt
