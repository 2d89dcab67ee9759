#include "ggmac/matrix_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ggmac {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        std::ostringstream msg;
        msg << "matrix read failed at entry (" << i << "," << j << "): "
            << "expected " << rows << "x" << cols << " numeric entries";
        throw std::runtime_error(msg.str());
      }
    }
  }
  return m;
}

void write_kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << ' ' << value << '\n';
}

std::string expect_kv(std::istream& in, const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) {
    throw std::runtime_error("malformed header: expected key '" + key + "', got '" + k + "'");
  }
  return v;
}

}  // namespace ggmac
