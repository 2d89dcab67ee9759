// Independent reference implementations used only by tests. These deliberately
// take different algorithmic routes than the library (proximal gradient instead
// of block coordinate descent, explicit Kronecker products instead of entry
// streaming) so that agreement between the two is meaningful evidence.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "ggmac/model.hpp"

namespace oracles {

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// tr(theta * s) - logdet(theta) + lambda * sum_{all j,k} |theta_jk|.
// Penalises the diagonal too; this is the program whose minimiser has
// diag(1/(s_jj + lambda)) at any diagonal s.
inline double full_penalty_objective(const Eigen::MatrixXd& theta,
                                     const Eigen::MatrixXd& s, double lambda) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return (theta.array() * s.array()).sum() - logdet +
         lambda * theta.array().abs().sum();
}

// Proximal gradient descent (ISTA with backtracking) on the fully penalised
// program. Slow but simple, and monotone by construction.
inline Eigen::MatrixXd ista_glasso(const Eigen::MatrixXd& s, double lambda,
                                   double tol = 1e-10, int max_iters = 500000) {
  const int d = static_cast<int>(s.rows());
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) theta(j, j) = 1.0 / (s(j, j) + lambda);

  double step = 1.0;
  double obj = full_penalty_objective(theta, s, lambda);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::LLT<Eigen::MatrixXd> llt(theta);
    Eigen::MatrixXd grad =
        s - llt.solve(Eigen::MatrixXd::Identity(d, d));  // s - theta^{-1}
    Eigen::MatrixXd next(d, d);
    double next_obj = 0.0;
    for (;;) {
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          next(j, k) = soft(theta(j, k) - step * grad(j, k), step * lambda);
        }
      }
      next = ((next + next.transpose()) / 2.0).eval();
      next_obj = full_penalty_objective(next, s, lambda);
      if (next_obj <= obj + 1e-15) break;
      step /= 2.0;
      if (step < 1e-14) {  // at a fixed point up to rounding
        return theta;
      }
    }
    double move = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    obj = next_obj;
    if (move / step < tol) break;
  }
  return theta;
}

// Fisher-matrix constants computed the expensive way: materialise the full
// d^2 x d^2 Kronecker product, slice rows/columns by edge membership with
// ordered-pair indexing r = j*d + k, and invert densely.
struct KronConstants {
  double alpha = 0.0;
  double kappa_sigma = 0.0;
  double kappa_gamma = 0.0;
};

inline KronConstants kron_constants(const ggmac::GgmModel& model) {
  const int d = model.dim;
  const Eigen::MatrixXd gamma =
      Eigen::kroneckerProduct(model.covariance, model.covariance);

  std::vector<int> in_s, in_sc;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (model.precision(j, k) != 0.0) {
        in_s.push_back(j * d + k);
      } else {
        in_sc.push_back(j * d + k);
      }
    }
  }

  Eigen::MatrixXd gamma_ss(in_s.size(), in_s.size());
  for (size_t a = 0; a < in_s.size(); ++a) {
    for (size_t b = 0; b < in_s.size(); ++b) {
      gamma_ss(a, b) = gamma(in_s[a], in_s[b]);
    }
  }
  Eigen::MatrixXd inv = gamma_ss.inverse();

  KronConstants out;
  out.kappa_gamma = inv.cwiseAbs().rowwise().sum().maxCoeff();
  out.kappa_sigma = model.covariance.cwiseAbs().rowwise().sum().maxCoeff();
  if (in_sc.empty()) {
    out.alpha = 1.0;
    return out;
  }
  Eigen::MatrixXd gamma_scs(in_sc.size(), in_s.size());
  for (size_t a = 0; a < in_sc.size(); ++a) {
    for (size_t b = 0; b < in_s.size(); ++b) {
      gamma_scs(a, b) = gamma(in_sc[a], in_s[b]);
    }
  }
  double worst = (gamma_scs * inv).cwiseAbs().rowwise().sum().maxCoeff();
  out.alpha = 1.0 - worst;
  return out;
}

}  // namespace oracles
