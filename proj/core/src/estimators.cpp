#include "ggmac/estimators.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ggmac/matrix_io.hpp"

namespace ggmac {

const char* to_string(Method m) {
  switch (m) {
    case Method::original: return "original";
    case Method::signs: return "signs";
    case Method::uncoded: return "uncoded";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "original") return Method::original;
  if (s == "signs") return Method::signs;
  if (s == "uncoded") return Method::uncoded;
  throw std::invalid_argument("unknown method '" + s + "' (original|signs|uncoded)");
}

void validate_estimate(const CovarianceEstimate& est, double tol) {
  if (est.matrix.rows() < 1 || est.matrix.rows() != est.matrix.cols()) {
    throw std::runtime_error("covariance estimate must be square and nonempty");
  }
  if ((est.matrix - est.matrix.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw std::runtime_error("covariance estimate is not symmetric");
  }
  if (!(est.matrix.diagonal().minCoeff() > 0.0)) {
    throw std::runtime_error("covariance estimate has a nonpositive diagonal entry");
  }
  if (est.n_used < 1) throw std::runtime_error("covariance estimate has n_used < 1");
}

CovarianceEstimate sample_covariance(const SampleMatrix& samples) {
  const long n = samples.rows();
  if (n < 1) throw std::invalid_argument("need at least one sample");
  const Eigen::Index d = samples.cols();

  CovarianceEstimate est;
  est.matrix = Eigen::MatrixXd::Zero(d, d);
  est.matrix.selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose(),
                                                        1.0 / static_cast<double>(n));
  est.matrix = est.matrix.selfadjointView<Eigen::Lower>();
  est.method = Method::original;
  est.n_used = n;
  return est;
}

SignMatrix sign_quantize(const SampleMatrix& samples) {
  // sign(0) = +1 keeps the quantizer a deterministic two-level map.
  return (samples.array() >= 0.0)
      .select(1.0, Eigen::ArrayXXd::Constant(samples.rows(), samples.cols(), -1.0))
      .matrix();
}

double estimate_beta(const Eigen::VectorXd& bits_j, const Eigen::VectorXd& bits_k) {
  const long n = bits_j.size();
  if (n < 1 || bits_k.size() != n) {
    throw std::invalid_argument("bit streams must have equal positive length");
  }
  long agree = 0;
  for (long i = 0; i < n; ++i) {
    if ((bits_j(i) > 0.0) == (bits_k(i) > 0.0)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

CovarianceEstimate signs_covariance(const SignMatrix& bits) {
  const long n = bits.rows();
  if (n < 1) throw std::invalid_argument("need at least one sample of sign bits");
  if ((bits.cwiseAbs().array() != 1.0).any()) {
    throw std::invalid_argument("sign matrix entries must be exactly +1 or -1");
  }
  const Eigen::Index d = bits.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(bits.transpose(), 1.0);
  gram = gram.selfadjointView<Eigen::Lower>();
  return signs_covariance_from_gram(gram, n);
}

CovarianceEstimate signs_covariance_from_gram(const Eigen::MatrixXd& gram, long n) {
  if (n < 1) throw std::invalid_argument("need at least one sample of sign bits");
  if (gram.rows() != gram.cols()) throw std::invalid_argument("bit Gram matrix must be square");

  // Agreement fraction per pair from the +/-1 inner products, then the arcsine
  // law inverted: rho = -cos(pi * beta).
  Eigen::ArrayXXd beta = (1.0 + gram.array() / static_cast<double>(n)) / 2.0;
  CovarianceEstimate est;
  est.matrix = (-(std::numbers::pi * beta).cos()).matrix();
  est.matrix.diagonal().setOnes();
  est.method = Method::signs;
  est.n_used = n;
  return est;
}

CovarianceEstimate uncoded_covariance(const ReceivedMatrix& received,
                                      const RealBlockChannel& chan) {
  const long rows = received.rows();
  if (rows < 1) throw std::invalid_argument("need at least one received block");
  if (received.cols() != chan.mixing.rows()) {
    throw std::invalid_argument("received width does not match the channel block size");
  }
  const Eigen::Index w = received.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(w, w);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(received.transpose(), 1.0);
  gram = gram.selfadjointView<Eigen::Lower>();
  return uncoded_covariance_from_gram(gram, rows, chan);
}

CovarianceEstimate uncoded_covariance_from_gram(const Eigen::MatrixXd& gram,
                                                long rows,
                                                const RealBlockChannel& chan) {
  if (rows < 1) throw std::invalid_argument("need at least one received block");
  const Eigen::Index w = chan.mixing.rows();
  if (gram.rows() != w || gram.cols() != w) {
    throw std::invalid_argument("receive Gram size does not match the channel block size");
  }
  const Eigen::Index d = w / 2;

  // Undo the mixing on the second moment and subtract the known noise
  // contribution, then fold the two real blocks of the complex symbol back
  // into one estimate.
  const Eigen::MatrixXd& a = chan.mixing_inv;
  Eigen::MatrixXd unmixed = a * (gram / static_cast<double>(rows)) * a.transpose();
  if (chan.noise_var > 0.0) {
    unmixed.noalias() -= chan.noise_var * (a * a.transpose());
  }

  CovarianceEstimate est;
  est.matrix = 0.5 * (unmixed.topLeftCorner(d, d) + unmixed.bottomRightCorner(d, d));
  est.matrix = 0.5 * (est.matrix + est.matrix.transpose()).eval();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (est.matrix(j, j) < kUncodedDiagFloor) {
      est.matrix(j, j) = kUncodedDiagFloor;
      ++est.clamped_diagonals;
    }
  }
  est.method = Method::uncoded;
  est.n_used = 2 * rows;
  return est;
}

double uncoded_tail_constant(const RealBlockChannel& chan) {
  const double r = 1.0 + chan.noise_var / (chan.sigma_min * chan.sigma_min);
  return 3200.0 * r * r;
}

void save_covariance(const CovarianceEstimate& est, const std::string& path) {
  validate_estimate(est);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "ggmac-covariance v1\n";
  write_kv(out, "dim", std::to_string(est.matrix.rows()));
  write_kv(out, "method", to_string(est.method));
  write_kv(out, "n_used", std::to_string(est.n_used));
  write_kv(out, "clamped_diagonals", std::to_string(est.clamped_diagonals));
  out << "matrix\n";
  write_matrix(out, est.matrix);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

CovarianceEstimate load_covariance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string magic, version;
  in >> magic >> version;
  if (magic != "ggmac-covariance" || version != "v1") {
    throw std::runtime_error("'" + path + "' is not a ggmac-covariance v1 file");
  }
  CovarianceEstimate est;
  const int dim = std::stoi(expect_kv(in, "dim"));
  if (dim < 1) throw std::runtime_error("covariance file has nonpositive dim");
  est.method = method_from_string(expect_kv(in, "method"));
  est.n_used = std::stol(expect_kv(in, "n_used"));
  est.clamped_diagonals = std::stoi(expect_kv(in, "clamped_diagonals"));
  std::string marker;
  in >> marker;
  if (marker != "matrix") throw std::runtime_error("covariance file is missing the matrix block");
  est.matrix = read_matrix(in, dim, dim);
  validate_estimate(est);
  return est;
}

}  // namespace ggmac
