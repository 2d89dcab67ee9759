#include "ggmac/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ggmac {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Precision matrix from the working covariance and the column regression
// coefficients: theta_jj = 1/(w_jj - w12.beta_j), theta_.j = -beta_j*theta_jj.
Eigen::MatrixXd reconstruct_theta(const Eigen::MatrixXd& w, const Eigen::MatrixXd& beta) {
  const Eigen::Index d = w.rows();
  Eigen::MatrixXd theta(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double dot = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      if (r != j) dot += w(r, j) * beta(r, j);
    }
    const double denom = w(j, j) - dot;
    const double tjj = 1.0 / denom;
    theta(j, j) = tjj;
    for (Eigen::Index r = 0; r < d; ++r) {
      if (r != j) theta(r, j) = -beta(r, j) * tjj;
    }
  }
  return 0.5 * (theta + theta.transpose()).eval();
}

double objective_or_inf(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& s,
                        double lambda) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double off = 0.0;
  const Eigen::Index d = theta.rows();
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (j != k) off += std::abs(theta(j, k));
    }
  }
  return theta.cwiseProduct(s).sum() - logdet + lambda * off;
}

// Objective of the program the sweep actually solves. Fixing the working
// covariance diagonal at S_jj + lambda amounts to penalizing the (positive)
// diagonal of theta as well, which is the same as running the off-diagonal
// penalty against S + lambda*I. Iterate selection must use this form: the
// off-diagonal objective is minimized by a different matrix and would steer
// the incumbent away from the solver's own fixed point.
double program_objective_or_inf(const Eigen::MatrixXd& theta,
                                const Eigen::MatrixXd& s, double lambda) {
  const double base = objective_or_inf(theta, s, lambda);
  return std::isfinite(base) ? base + lambda * theta.trace() : base;
}

}  // namespace

double objective(const Eigen::MatrixXd& theta, const CovarianceEstimate& est,
                 double lambda) {
  if (theta.rows() != theta.cols() || theta.rows() != est.matrix.rows()) {
    throw std::invalid_argument("objective: theta and S must be square with equal size");
  }
  double v = objective_or_inf(theta, est.matrix, lambda);
  if (std::isinf(v)) throw std::runtime_error("objective: theta is not positive definite");
  return v;
}

SolverResult glasso_solve(const CovarianceEstimate& est, const SolverConfig& cfg) {
  const Eigen::MatrixXd& s = est.matrix;
  const Eigen::Index d = s.rows();
  if (d < 1 || s.cols() != d) throw std::invalid_argument("glasso: S must be square");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("glasso: S must be symmetric");
  }
  if (!(s.diagonal().minCoeff() > 0.0)) {
    throw std::invalid_argument("glasso: S needs a strictly positive diagonal");
  }
  if (cfg.lambda < 0.0) throw std::invalid_argument("glasso: lambda must be nonnegative");
  if (!(cfg.duality_tol > 0.0) || !(cfg.inner_tol > 0.0) || cfg.max_sweeps < 1 ||
      cfg.edge_threshold < 0.0) {
    throw std::invalid_argument("glasso: tolerances must be positive");
  }

  const double lam = cfg.lambda;
  Eigen::MatrixXd w;
  if (cfg.init == SolverConfig::Init::full) {
    w = s;
  } else {
    w = Eigen::MatrixXd(s.diagonal().asDiagonal());
  }
  w.diagonal() = (s.diagonal().array() + lam).matrix();  // fixed from here on

  SolverResult result;

  // An indefinite input can make the full starting point indefinite, and the
  // sweep safeguard below can only damp toward an earlier iterate. Fall back
  // to the diagonal start, which is positive definite whenever the input
  // diagonal is positive; both starts reach the same optimum.
  if (cfg.init == SolverConfig::Init::full && d > 1 &&
      Eigen::LLT<Eigen::MatrixXd>(w).info() != Eigen::Success) {
    ++result.pd_repairs;
    w.setZero();
    w.diagonal() = (s.diagonal().array() + lam).matrix();
  }
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(d, d);

  if (d == 1) {
    result.theta = Eigen::MatrixXd::Constant(1, 1, 1.0 / w(0, 0));
    result.sigma = w;
    result.converged = true;
    result.sweeps_used = 0;
    result.objective_trace.push_back(program_objective_or_inf(result.theta, s, lam));
    return result;
  }

  // Outer stop: mean absolute off-diagonal change of W per sweep, relative to
  // the mean absolute off-diagonal of S.
  double s_off_mean = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (j != k) s_off_mean += std::abs(s(j, k));
    }
  }
  s_off_mean /= static_cast<double>(d * (d - 1));
  const double stop_level = cfg.duality_tol * s_off_mean;

  Eigen::MatrixXd v(d - 1, d - 1);
  Eigen::VectorXd s12(d - 1), b(d - 1), u(d - 1), w12_old(d - 1);
  Eigen::MatrixXd w_prev;

  // The dual sweep improves the dual objective, not necessarily the primal one
  // of the reconstructed precision, so the solution kept (and the recorded
  // trace) is the best primal iterate seen so far.
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd theta_best, w_best, beta_best;

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    result.sweeps_used = sweep;
    w_prev = w;
    double change = 0.0;

    for (Eigen::Index j = 0; j < d; ++j) {
      // Gather the subproblem with row/column j removed.
      Eigen::Index a = 0;
      for (Eigen::Index r = 0; r < d; ++r) {
        if (r == j) continue;
        s12(a) = s(r, j);
        b(a) = beta(r, j);
        w12_old(a) = w(r, j);
        Eigen::Index bb = 0;
        for (Eigen::Index c = 0; c < d; ++c) {
          if (c == j) continue;
          v(a, bb) = w(r, c);
          ++bb;
        }
        ++a;
      }

      // Cyclic coordinate descent with soft thresholding on
      //   min 0.5 b'Vb - s12'b + lam |b|_1,  keeping u = V b current.
      u.noalias() = v * b;
      int it = 0;
      for (; it < cfg.max_inner_iters; ++it) {
        double max_step = 0.0;
        for (Eigen::Index k = 0; k < d - 1; ++k) {
          const double bk = b(k);
          const double g = s12(k) - u(k) + v(k, k) * bk;
          const double bn = soft_threshold(g, lam) / v(k, k);
          if (bn != bk) {
            u += v.col(k) * (bn - bk);
            b(k) = bn;
            max_step = std::max(max_step, std::abs(bn - bk));
          }
        }
        if (max_step <= cfg.inner_tol) break;
      }
      if (it == cfg.max_inner_iters) ++result.inner_failures;

      change += (u - w12_old).cwiseAbs().sum();
      a = 0;
      for (Eigen::Index r = 0; r < d; ++r) {
        if (r == j) continue;
        w(r, j) = u(a);
        w(j, r) = u(a);
        beta(r, j) = b(a);
        ++a;
      }
    }

    // Keep the working covariance positive definite; damp toward the previous
    // sweep if a column update overshot (possible for indefinite inputs).
    if (Eigen::LLT<Eigen::MatrixXd>(w).info() != Eigen::Success) {
      ++result.pd_repairs;
      bool repaired = false;
      for (int h = 0; h < 60; ++h) {
        w = 0.5 * (w + w_prev);
        if (Eigen::LLT<Eigen::MatrixXd>(w).info() == Eigen::Success) {
          repaired = true;
          break;
        }
      }
      if (!repaired) {
        throw std::runtime_error(
            "glasso: working covariance lost positive definiteness beyond repair");
      }
    }

    Eigen::MatrixXd theta_sweep = reconstruct_theta(w, beta);
    const double obj_sweep = program_objective_or_inf(theta_sweep, s, lam);
    if (obj_sweep < best_obj) {
      best_obj = obj_sweep;
      theta_best = std::move(theta_sweep);
      w_best = w;
      beta_best = beta;
    }
    result.objective_trace.push_back(best_obj);

    if (change / static_cast<double>(d * (d - 1)) <= stop_level) {
      result.converged = true;
      break;
    }
  }

  if (!std::isfinite(best_obj)) {
    // No sweep produced a positive definite reconstruction; hand back the last
    // iterate so the caller sees what the solver ended on.
    theta_best = reconstruct_theta(w, beta);
    w_best = w;
    beta_best = beta;
  }
  result.theta = std::move(theta_best);
  result.sigma = std::move(w_best);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j + 1; k < d; ++k) {
      const bool support = beta_best(k, j) != 0.0 || beta_best(j, k) != 0.0;
      if (support && std::abs(result.theta(j, k)) > cfg.edge_threshold) {
        result.edges.emplace_back(static_cast<int>(j), static_cast<int>(k));
        result.edge_signs.push_back(result.theta(j, k) > 0.0 ? 1 : -1);
      }
    }
  }
  return result;
}

KktReport kkt_residuals(const CovarianceEstimate& est, double lambda,
                        const SolverResult& result) {
  const Eigen::MatrixXd& s = est.matrix;
  const Eigen::MatrixXd& w = result.sigma;
  const Eigen::Index d = s.rows();
  std::vector<char> edge_mask(static_cast<std::size_t>(d) * d, 0);
  for (const auto& [j, k] : result.edges) {
    edge_mask[static_cast<std::size_t>(j) * d + k] = 1;
  }

  KktReport report;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j + 1; k < d; ++k) {
      const double grad = s(j, k) - w(j, k);
      if (edge_mask[static_cast<std::size_t>(j) * d + k]) {
        const double sign = result.theta(j, k) > 0.0 ? 1.0 : -1.0;
        report.max_edge_residual =
            std::max(report.max_edge_residual, std::abs(grad + lambda * sign));
      } else {
        report.max_nonedge_excess =
            std::max(report.max_nonedge_excess, std::max(0.0, std::abs(grad) - lambda));
      }
    }
  }
  return report;
}

double theoretical_lambda(double alpha, long n, double eps) {
  if (!(alpha > 0.0 && alpha <= 1.0) || n < 1 || !(eps > 0.0 && eps < 1.0)) {
    std::cerr << "theoretical_lambda: inputs outside the guarantee regime (alpha="
              << alpha << ", n=" << n << ", eps=" << eps << ")\n";
  }
  return (8.0 * std::numbers::pi / alpha) *
         std::sqrt(std::log(2.0 / eps) / (2.0 * static_cast<double>(n)));
}

double uncoded_theoretical_lambda(double alpha, long n, double eps,
                                  double tail_constant) {
  if (!(alpha > 0.0 && alpha <= 1.0) || n < 1 || !(eps > 0.0 && eps < 1.0) ||
      !(tail_constant > 0.0)) {
    std::cerr << "uncoded_theoretical_lambda: inputs outside the guarantee regime "
              << "(alpha=" << alpha << ", n=" << n << ", eps=" << eps
              << ", c=" << tail_constant << ")\n";
  }
  return (8.0 / alpha) *
         std::sqrt(2.0 * tail_constant * std::log(8.0 / eps) / static_cast<double>(n));
}

double heuristic_lambda(double base, Method m) {
  switch (m) {
    case Method::original: return base;
    case Method::signs: return 4.0 * base;
    case Method::uncoded: return 2.0 / 3.0 * base;
  }
  return base;
}

}  // namespace ggmac
