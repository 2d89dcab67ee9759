#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace ggmac {

// Shortest round-trip decimal form (printf %.17g trimmed by value).
std::string format_double(double v);

// One matrix row per line, entries space separated, 17 significant digits.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);

// Reads rows x cols entries, whitespace separated, line breaks not significant.
// Throws std::runtime_error on malformed or missing entries.
Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols);

// "key value" line helpers for the small headers in model/covariance files.
void write_kv(std::ostream& out, const std::string& key, const std::string& value);
std::string expect_kv(std::istream& in, const std::string& key);

}  // namespace ggmac
