#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggmac/types.hpp"

namespace ggmac {

// Ground-truth sparse Gaussian graphical model. The off-diagonal zero pattern
// of the precision matrix is the graph; the covariance has unit diagonal so
// every machine observes a standardized variable.
struct GgmModel {
  int dim = 0;
  Eigen::MatrixXd precision;   // symmetric positive definite, exact zeros off the graph
  Eigen::MatrixXd covariance;  // inverse of precision, unit diagonal
  // Ordered index pairs (j,k) with precision(j,k) != 0; includes the diagonal
  // and both orientations of every edge.
  std::vector<std::pair<int, int>> edge_set;
  int max_degree = 1;      // max vertex degree, floored at 1
  double theta_min = 0.0;  // min |precision| over off-diagonal edges, 0 if edgeless
  std::uint64_t seed = 0;  // generation seed, 0 for closed-form models
  std::optional<double> alpha;  // incoherence margin when it has been computed
};

// Off-diagonal edges as unordered pairs with j < k.
std::vector<std::pair<int, int>> undirected_edges(const GgmModel& model);

// Checks symmetry, positive definiteness, the precision/covariance inverse
// relation, unit variances and edge-set consistency. Throws std::runtime_error
// describing the first violation.
void validate_model(const GgmModel& model, double tol = 1e-8);

struct RandomModelOptions {
  // Diagonal shift after placing edge weights: |lambda_min|*(1+rel) + abs.
  // The default doubles the minimal shift; tighter margins leave the precision
  // close to singular and the incoherence screen then rejects nearly every
  // draw at moderate dimensions.
  double pd_margin_rel = 1.0;
  double pd_margin_abs = 0.01;
  // Redraw budget until the incoherence condition holds (alpha > 0).
  int incoherence_retries = 100;
  bool require_incoherence = true;
};

// Erdos-Renyi style generator: each unordered pair is an edge candidate with
// probability edge_prob, candidates are visited in shuffled order and dropped
// once either endpoint reaches max_degree. Edge weights are uniform on
// [weight_low, weight_high], the diagonal is shifted to restore positive
// definiteness, and the model is rescaled to unit variances (which preserves
// the zero pattern exactly). When incoherence is required the whole draw is
// retried with a derived seed until the margin is positive.
GgmModel generate_random_model(int dim, double edge_prob, int max_degree,
                               double weight_low, double weight_high,
                               std::uint64_t seed,
                               const RandomModelOptions& opts = {});

// Star graph on dim vertices, hub = vertex 0, built so the precision matrix is
// exactly star-sparse: covariance has unit diagonal, rho on hub-leaf pairs and
// rho^2 between leaves. Positive definite for all dim when |rho| < 1.
GgmModel generate_star_model(int dim, double rho);

struct ModelConstants {
  double alpha = 0.0;        // incoherence margin, in (0, 1]
  double kappa_sigma = 0.0;  // max-row-sum norm of the covariance
  double kappa_gamma = 0.0;  // max-row-sum norm of the inverse on-support Fisher block
  double incoherence_value = 0.0;  // the norm alpha is one minus
};

// Fisher-information constants of the model. The Fisher matrix is the
// Kronecker square of the covariance, indexed by ordered pairs r = j*dim + k;
// only the on-support block and the off-support rows against it are formed.
// Throws std::runtime_error if the on-support block is numerically singular,
// if the incoherence condition fails (norm >= 1), or if dim exceeds 150 and
// allow_large is not set (the off-support block grows as d^2 x |S|).
ModelConstants compute_constants(const GgmModel& model, bool allow_large = false);

// n x dim i.i.d. draws from N(0, covariance), one sample per row.
SampleMatrix sample(const GgmModel& model, long n, std::uint64_t seed);

void save_model(const GgmModel& model, const std::string& path);
GgmModel load_model(const std::string& path);

}  // namespace ggmac
