#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "ggmac/estimators.hpp"
#include "ggmac/model.hpp"
#include "ggmac/rng.hpp"
#include "ggmac/solver.hpp"
#include "oracles.hpp"

using namespace ggmac;

namespace {

CovarianceEstimate wrap(const Eigen::MatrixXd& s, long n = 100) {
  CovarianceEstimate est;
  est.matrix = s;
  est.n_used = n;
  return est;
}

// Random correlation-like SPD matrix with unit diagonal.
Eigen::MatrixXd random_spd(int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) a(j, k) = rng.normal();
  }
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(d) +
                      0.2 * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd scale = s.diagonal().cwiseSqrt().cwiseInverse();
  return scale.asDiagonal() * s * scale.asDiagonal();
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("identity input gives the shrunk diagonal solution") {
  SolverConfig cfg;
  cfg.lambda = 0.1;
  SolverResult res = glasso_solve(wrap(Eigen::MatrixXd::Identity(4, 4)), cfg);
  CHECK(res.converged);
  CHECK(res.sweeps_used <= 2);
  CHECK(res.edges.empty());
  Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(4, 4) / 1.1;
  CHECK((res.theta - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((res.sigma - Eigen::MatrixXd::Identity(4, 4) * 1.1).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(res.objective_trace.size() == static_cast<size_t>(res.sweeps_used));
}

TEST_CASE("large regularization empties the support") {
  Eigen::MatrixXd s = random_spd(6, 31);
  SolverConfig cfg;
  cfg.lambda = 1.5;  // above every |off-diagonal| of a correlation matrix
  SolverResult res = glasso_solve(wrap(s), cfg);
  CHECK(res.converged);
  CHECK(res.edges.empty());
  for (int j = 0; j < 6; ++j) {
    CHECK(res.theta(j, j) == doctest::Approx(1.0 / (s(j, j) + 1.5)).epsilon(1e-10));
  }
}

TEST_CASE("zero regularization inverts a positive definite input") {
  Eigen::MatrixXd s = random_spd(8, 7);
  SolverConfig cfg;
  cfg.lambda = 0.0;
  SolverResult res = glasso_solve(wrap(s), cfg);
  CHECK(res.converged);
  Eigen::MatrixXd inv = s.inverse();
  CHECK((res.theta - inv).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("agrees with a proximal-gradient reference solver") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Eigen::MatrixXd s = random_spd(3, seed);
    for (double lambda : {0.02, 0.1}) {
      SolverConfig cfg;
      cfg.lambda = lambda;
      SolverResult res = glasso_solve(wrap(s), cfg);
      REQUIRE(res.converged);

      Eigen::MatrixXd ref = oracles::ista_glasso(s, lambda);
      double mine = oracles::full_penalty_objective(res.theta, s, lambda);
      double theirs = oracles::full_penalty_objective(ref, s, lambda);
      CHECK(std::abs(mine - theirs) < 1e-6);
      CHECK((res.theta - ref).cwiseAbs().maxCoeff() < 1e-4);

      KktReport kkt = kkt_residuals(wrap(s), lambda, res);
      CHECK(kkt.max_edge_residual < 10 * cfg.duality_tol);
      CHECK(kkt.max_nonedge_excess < 10 * cfg.duality_tol);
    }
  }
}

TEST_CASE("both starting points reach the same optimum") {
  // Includes an indefinite input of the kind the sign pipeline produces.
  GgmModel m = generate_star_model(6, 0.45);
  CovarianceEstimate signs = signs_covariance(sign_quantize(sample(m, 40, 13)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(signs.matrix);
  INFO("smallest eigenvalue ", eig.eigenvalues().minCoeff());

  std::vector<CovarianceEstimate> inputs{wrap(random_spd(5, 99)), signs};
  for (const auto& est : inputs) {
    SolverConfig cfg;
    cfg.lambda = 0.25;
    cfg.init = SolverConfig::Init::full;
    SolverResult full = glasso_solve(est, cfg);
    cfg.init = SolverConfig::Init::diagonal;
    SolverResult diag = glasso_solve(est, cfg);
    REQUIRE(full.converged);
    REQUIRE(diag.converged);
    CHECK((full.theta - diag.theta).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("objective trace never increases") {
  std::vector<CovarianceEstimate> inputs;
  for (std::uint64_t s = 10; s < 14; ++s) inputs.push_back(wrap(random_spd(7, s)));
  GgmModel m = generate_star_model(8, 0.4);
  inputs.push_back(signs_covariance(sign_quantize(sample(m, 60, 5))));
  for (const auto& est : inputs) {
    for (double lambda : {0.05, 0.2, 0.6}) {
      SolverConfig cfg;
      cfg.lambda = lambda;
      SolverResult res = glasso_solve(est, cfg);
      for (size_t i = 1; i < res.objective_trace.size(); ++i) {
        CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-10);
      }
    }
  }
}

TEST_CASE("population input recovers the exact support with signs") {
  // rho small enough that the star satisfies the incoherence condition, which
  // is what guarantees support recovery from population input.
  GgmModel m = generate_star_model(5, 0.25);
  SolverConfig cfg;
  cfg.lambda = 0.02;
  SolverResult res = glasso_solve(wrap(m.covariance), cfg);
  REQUIRE(res.converged);
  auto truth = undirected_edges(m);
  REQUIRE(res.edges.size() == truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    CHECK(res.edges[i] == truth[i]);
    // Star precision off-diagonals are negative.
    CHECK(res.edge_signs[i] == -1);
  }
}

TEST_CASE("objective closed forms and guards") {
  CovarianceEstimate eye = wrap(Eigen::MatrixXd::Identity(3, 3));
  CHECK(objective(Eigen::MatrixXd::Identity(3, 3), eye, 0.7) ==
        doctest::Approx(3.0).epsilon(1e-14));

  Eigen::MatrixXd theta(1, 1);
  theta << 2.0;
  CovarianceEstimate s1 = wrap(Eigen::MatrixXd::Constant(1, 1, 0.5));
  CHECK(objective(theta, s1, 0.3) ==
        doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-14));

  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((void)objective(indef, wrap(Eigen::MatrixXd::Identity(2, 2)), 0.1),
                  std::runtime_error);
}

TEST_CASE("input validation") {
  SolverConfig cfg;
  cfg.lambda = 0.1;
  CHECK_THROWS_AS((void)glasso_solve(wrap(Eigen::MatrixXd::Zero(2, 3)), cfg),
                  std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS((void)glasso_solve(wrap(asym), cfg), std::invalid_argument);
  Eigen::MatrixXd negdiag(2, 2);
  negdiag << -1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS((void)glasso_solve(wrap(negdiag), cfg), std::invalid_argument);
  cfg.lambda = -0.1;
  CHECK_THROWS_AS((void)glasso_solve(wrap(Eigen::MatrixXd::Identity(2, 2)), cfg),
                  std::invalid_argument);
}

TEST_CASE("sweep cap reports non-convergence instead of spinning") {
  SolverConfig cfg;
  cfg.lambda = 0.01;
  cfg.max_sweeps = 1;
  cfg.duality_tol = 1e-14;
  SolverResult res = glasso_solve(wrap(random_spd(6, 55)), cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.sweeps_used == 1);
  CHECK(res.theta.rows() == 6);
}

TEST_CASE("one-dimensional input") {
  SolverConfig cfg;
  cfg.lambda = 0.4;
  SolverResult res = glasso_solve(wrap(Eigen::MatrixXd::Constant(1, 1, 2.0)), cfg);
  CHECK(res.converged);
  CHECK(res.theta(0, 0) == doctest::Approx(1.0 / 2.4).epsilon(1e-14));
  CHECK(res.edges.empty());
}

TEST_CASE("guarantee-driven regularization formulas") {
  // alpha=1, eps=2/e makes log(2/eps)=1; n=50 gives 8*pi*sqrt(1/100).
  double eps = 2.0 / std::numbers::e;
  CHECK(theoretical_lambda(1.0, 50, eps) ==
        doctest::Approx(8.0 * std::numbers::pi / 10.0).epsilon(1e-12));
  // Scales as 1/alpha and 1/sqrt(n).
  CHECK(theoretical_lambda(0.5, 50, eps) ==
        doctest::Approx(2.0 * theoretical_lambda(1.0, 50, eps)).epsilon(1e-12));
  CHECK(theoretical_lambda(1.0, 200, eps) ==
        doctest::Approx(0.5 * theoretical_lambda(1.0, 50, eps)).epsilon(1e-12));

  double eps8 = 8.0 / std::numbers::e;  // log(8/eps) = 1
  CHECK(uncoded_theoretical_lambda(1.0, 100, eps8, 50.0) ==
        doctest::Approx(8.0 * 1.0).epsilon(1e-12));

  CHECK(heuristic_lambda(0.1, Method::original) == 0.1);
  CHECK(heuristic_lambda(0.1, Method::signs) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(heuristic_lambda(0.3, Method::uncoded) ==
        doctest::Approx(0.2).epsilon(1e-15));
}

}  // TEST_SUITE
