#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ggmac/estimators.hpp"

namespace ggmac {

struct SolverConfig {
  double lambda = 0.0;
  int max_sweeps = 200;
  double duality_tol = 1e-5;     // outer stop, relative mean change of the working covariance
  double inner_tol = 1e-7;       // coordinate-descent stop, max coefficient step
  double edge_threshold = 1e-8;  // |theta_jk| above this counts as an edge
  int max_inner_iters = 1000;    // coordinate-descent cycles per column
  // Starting working covariance: the input plus lambda on the diagonal, or its
  // diagonal part only. Distinct PD starting points should reach the same
  // optimum; tests exploit that.
  enum class Init { full, diagonal } init = Init::full;
};

struct SolverResult {
  Eigen::MatrixXd theta;  // precision estimate, symmetrized
  Eigen::MatrixXd sigma;  // working covariance, inverse of theta at convergence
  std::vector<std::pair<int, int>> edges;  // unordered support, j < k
  std::vector<int> edge_signs;             // sign of theta at each edge
  // Objective of the best iterate found through each sweep, so the sequence
  // never increases; theta/sigma are that best iterate. The value is the
  // objective of the program the sweeps solve, which adds lambda to the input
  // diagonal (equivalently, penalizes the whole matrix rather than just the
  // off-diagonal), so it sits lambda*tr(theta) above objective().
  std::vector<double> objective_trace;
  bool converged = false;
  int sweeps_used = 0;
  int pd_repairs = 0;      // sweeps where the working covariance needed damping
  int inner_failures = 0;  // columns that hit the coordinate-descent cycle cap
};

// Penalized negative log-likelihood: tr(theta * S) - logdet(theta) + lambda *
// sum of off-diagonal |theta|. Throws std::runtime_error if theta is not
// positive definite.
double objective(const Eigen::MatrixXd& theta, const CovarianceEstimate& est,
                 double lambda);

// l1-regularized precision estimation by block coordinate descent on the
// working covariance: each column update is a lasso subproblem solved with
// cyclic coordinate descent and soft thresholding; the precision matrix is
// reconstructed from the final column regressions. Requires a symmetric input
// with positive diagonal and lambda >= 0 (lambda = 0 needs a PD input, where
// the result is its inverse). Throws std::invalid_argument on bad inputs and
// std::runtime_error if positive definiteness cannot be restored.
SolverResult glasso_solve(const CovarianceEstimate& est, const SolverConfig& cfg);

// Stationarity check at the returned point. For edges the penalized gradient
// |(S - sigma)_jk + lambda*sign(theta_jk)| should be ~0; for non-edges
// |(S - sigma)_jk| may not exceed lambda. Reports the worst violation of each.
struct KktReport {
  double max_edge_residual = 0.0;
  double max_nonedge_excess = 0.0;  // amount above lambda, 0 if within
};
KktReport kkt_residuals(const CovarianceEstimate& est, double lambda,
                        const SolverResult& result);

// Regularization from the recovery guarantee: (8*pi/alpha) * sqrt(log(2/eps) /
// (2n)). Inputs outside alpha in (0,1], eps in (0,1), n >= 1 only warn on
// stderr; the formula is still evaluated.
double theoretical_lambda(double alpha, long n, double eps);

// Uncoded counterpart carrying the channel tail constant:
// (8/alpha) * sqrt(2c * log(8/eps) / n).
double uncoded_theoretical_lambda(double alpha, long n, double eps,
                                  double tail_constant);

// Practical scaling of a base regularization per pipeline: x1 original,
// x4 signs, x2/3 uncoded.
double heuristic_lambda(double base, Method m);

}  // namespace ggmac
