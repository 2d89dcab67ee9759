#include "ggmac/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ggmac/matrix_io.hpp"
#include "ggmac/rng.hpp"

namespace ggmac {

namespace {

constexpr std::uint64_t kRetryTag = 0x6d6f64656cULL;  // model redraw stream

// Edge bookkeeping shared by generation and loading: ordered support pairs
// (diagonal plus both orientations), vertex degrees, min off-diagonal |theta|.
void fill_support_fields(GgmModel& model) {
  const int d = model.dim;
  model.edge_set.clear();
  std::vector<int> degree(d, 0);
  double tmin = 0.0;
  bool has_edge = false;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      double v = model.precision(j, k);
      if (j == k || v != 0.0) model.edge_set.emplace_back(j, k);
      if (j < k && v != 0.0) {
        ++degree[j];
        ++degree[k];
        double a = std::abs(v);
        tmin = has_edge ? std::min(tmin, a) : a;
        has_edge = true;
      }
    }
  }
  model.theta_min = has_edge ? tmin : 0.0;
  model.max_degree = std::max(1, *std::max_element(degree.begin(), degree.end()));
}

struct ConstantsOutcome {
  ModelConstants constants;
  bool admissible = false;
};

ConstantsOutcome constants_impl(const GgmModel& model) {
  const Eigen::MatrixXd& Q = model.covariance;
  const int d = model.dim;
  const auto& support = model.edge_set;
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());

  Eigen::MatrixXd gss(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      gss(a, b) = Q(support[a].first, support[b].first) *
                  Q(support[a].second, support[b].second);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gss);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the on-support Fisher block failed");
  }
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin <= lmax * 1e-12) {
    std::ostringstream msg;
    msg << "on-support Fisher block is numerically singular (eigenvalue range ["
        << lmin << ", " << lmax << "])";
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd inv = gss.llt().solve(Eigen::MatrixXd::Identity(s, s));

  ModelConstants out;
  out.kappa_gamma = inv.cwiseAbs().rowwise().sum().maxCoeff();
  out.kappa_sigma = Q.cwiseAbs().rowwise().sum().maxCoeff();

  // Off-support rows of the Fisher matrix against the support block, walked in
  // chunks so the d^2 x |S| matrix never materializes whole.
  std::vector<char> on_support(static_cast<std::size_t>(d) * d, 0);
  for (const auto& [j, k] : support) on_support[static_cast<std::size_t>(j) * d + k] = 1;

  double worst = 0.0;
  Eigen::VectorXd row(s);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (on_support[static_cast<std::size_t>(j) * d + k]) continue;
      for (Eigen::Index b = 0; b < s; ++b) {
        row(b) = Q(j, support[b].first) * Q(k, support[b].second);
      }
      worst = std::max(worst, (inv.transpose() * row).lpNorm<1>());
    }
  }
  out.incoherence_value = worst;
  out.alpha = 1.0 - worst;
  return {out, out.alpha > 0.0};
}

GgmModel single_draw(int dim, double edge_prob, int max_degree, double weight_low,
                     double weight_high, std::uint64_t seed,
                     const RandomModelOptions& opts) {
  Rng rng(seed);

  std::vector<std::pair<int, int>> candidates;
  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      if (rng.uniform() < edge_prob) candidates.emplace_back(j, k);
    }
  }
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(candidates[i - 1], candidates[pick(rng.engine())]);
  }

  std::vector<int> degree(dim, 0);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [j, k] : candidates) {
    if (degree[j] >= max_degree || degree[k] >= max_degree) continue;
    double w = rng.uniform(weight_low, weight_high);
    theta(j, k) = theta(k, j) = w;
    ++degree[j];
    ++degree[k];
  }

  // The diagonal is still zero, so the smallest eigenvalue is <= 0; shift the
  // whole diagonal to a safe positive margin.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta);
  const double lmin = es.eigenvalues().minCoeff();
  const double shift = std::abs(lmin) * (1.0 + opts.pd_margin_rel) + opts.pd_margin_abs;
  theta.diagonal().setConstant(shift);

  // Rescale to unit variances. The congruence theta <- D^1/2 theta D^1/2 with
  // D = diag(theta^-1) keeps exact zeros exactly zero.
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("random model lost positive definiteness after diagonal shift");
  }
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  Eigen::VectorXd scale = cov.diagonal().cwiseSqrt();
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) theta(j, k) *= scale(j) * scale(k);
  }

  GgmModel model;
  model.dim = dim;
  model.precision = theta;
  model.covariance = theta.llt().solve(Eigen::MatrixXd::Identity(dim, dim));
  model.seed = seed;
  fill_support_fields(model);
  return model;
}

}  // namespace

std::vector<std::pair<int, int>> undirected_edges(const GgmModel& model) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [j, k] : model.edge_set) {
    if (j < k) out.emplace_back(j, k);
  }
  return out;
}

void validate_model(const GgmModel& model, double tol) {
  const int d = model.dim;
  if (d < 1) throw std::runtime_error("model dimension must be positive");
  if (model.precision.rows() != d || model.precision.cols() != d ||
      model.covariance.rows() != d || model.covariance.cols() != d) {
    throw std::runtime_error("precision/covariance shape does not match dim");
  }
  if ((model.precision - model.precision.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw std::runtime_error("precision matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(model.precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("precision matrix is not positive definite");
  }
  Eigen::MatrixXd prod = model.precision * model.covariance;
  prod.diagonal().array() -= 1.0;
  if (prod.cwiseAbs().maxCoeff() > tol * std::max(1.0, model.precision.cwiseAbs().maxCoeff())) {
    throw std::runtime_error("covariance is not the inverse of the precision matrix");
  }
  if ((model.covariance.diagonal().array() - 1.0).abs().maxCoeff() > tol) {
    throw std::runtime_error("covariance diagonal is not 1");
  }

  GgmModel ref;
  ref.dim = d;
  ref.precision = model.precision;
  fill_support_fields(ref);
  if (ref.edge_set != model.edge_set) {
    throw std::runtime_error("edge_set does not match the precision zero pattern");
  }
  if (ref.max_degree != model.max_degree) {
    throw std::runtime_error("max_degree does not match the precision zero pattern");
  }
  if (std::abs(ref.theta_min - model.theta_min) > tol) {
    throw std::runtime_error("theta_min does not match the precision entries");
  }
  if (model.alpha && !(*model.alpha > 0.0 && *model.alpha <= 1.0)) {
    throw std::runtime_error("stored incoherence margin is outside (0, 1]");
  }
}

GgmModel generate_random_model(int dim, double edge_prob, int max_degree,
                               double weight_low, double weight_high,
                               std::uint64_t seed, const RandomModelOptions& opts) {
  if (dim < 2) throw std::invalid_argument("model dimension must be at least 2");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw std::invalid_argument("edge_prob must lie in [0, 1]");
  }
  if (max_degree < 1) throw std::invalid_argument("max_degree must be at least 1");
  if (!(weight_low < weight_high)) {
    throw std::invalid_argument("weight_low must be below weight_high");
  }
  if (opts.require_incoherence && dim > 150) {
    throw std::invalid_argument(
        "incoherence screening is limited to dim <= 150; set require_incoherence "
        "= false for larger models");
  }

  for (int attempt = 0; attempt <= opts.incoherence_retries; ++attempt) {
    std::uint64_t draw_seed =
        attempt == 0 ? seed : derive_seed(seed, kRetryTag, static_cast<std::uint64_t>(attempt));
    GgmModel model = single_draw(dim, edge_prob, max_degree, weight_low,
                                 weight_high, draw_seed, opts);
    model.seed = seed;
    if (!opts.require_incoherence) return model;
    ConstantsOutcome outcome = constants_impl(model);
    if (outcome.admissible) {
      model.alpha = outcome.constants.alpha;
      return model;
    }
  }
  std::ostringstream msg;
  msg << "no incoherent model found in " << (opts.incoherence_retries + 1)
      << " draws (dim=" << dim << ", edge_prob=" << edge_prob << ", max_degree="
      << max_degree << "); relax the graph or disable require_incoherence";
  throw std::runtime_error(msg.str());
}

GgmModel generate_star_model(int dim, double rho) {
  if (dim < 2) throw std::invalid_argument("star model needs dim >= 2");
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("star correlation must satisfy |rho| < 1");
  }

  // Correlations of a star-Markov Gaussian: rho between the hub and each leaf,
  // rho^2 between leaves. Its precision is exactly star-sparse and positive
  // definite for every dim, since the leaf block conditioned on the hub is
  // (1 - rho^2) * I.
  const int leaves = dim - 1;
  const double r2 = 1.0 - rho * rho;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(dim, dim, rho * rho);
  cov.row(0).setConstant(rho);
  cov.col(0).setConstant(rho);
  cov.diagonal().setOnes();

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(dim, dim);
  theta(0, 0) = 1.0 + leaves * rho * rho / r2;
  for (int i = 1; i < dim; ++i) {
    theta(i, i) = 1.0 / r2;
    if (rho != 0.0) theta(0, i) = theta(i, 0) = -rho / r2;
  }

  GgmModel model;
  model.dim = dim;
  model.precision = theta;
  model.covariance = cov;
  fill_support_fields(model);
  return model;
}

ModelConstants compute_constants(const GgmModel& model, bool allow_large) {
  if (model.dim > 150 && !allow_large) {
    throw std::runtime_error(
        "Fisher constants above dim = 150 need allow_large (off-support block "
        "grows as d^2 x |S|)");
  }
  ConstantsOutcome outcome = constants_impl(model);
  if (!outcome.admissible) {
    std::ostringstream msg;
    msg << "incoherence violated: off-support norm " << outcome.constants.incoherence_value
        << " >= 1";
    throw std::runtime_error(msg.str());
  }
  return outcome.constants;
}

SampleMatrix sample(const GgmModel& model, long n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("model covariance is not positive definite");
  }
  const int d = model.dim;
  SampleMatrix x(n, d);
  Rng rng(seed);
  // Column-major fill (contiguous in memory); the draw order is part of the
  // deterministic contract, tests reproduce it.
  for (int j = 0; j < d; ++j) {
    for (long i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  Eigen::MatrixXd lt = llt.matrixL().transpose();
  x = x * lt.triangularView<Eigen::Upper>();
  return x;
}

void save_model(const GgmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "ggmac-model v1\n";
  write_kv(out, "dim", std::to_string(model.dim));
  write_kv(out, "seed", std::to_string(model.seed));
  write_kv(out, "max_degree", std::to_string(model.max_degree));
  write_kv(out, "theta_min", format_double(model.theta_min));
  write_kv(out, "alpha", model.alpha ? format_double(*model.alpha) : "none");
  out << "theta\n";
  write_matrix(out, model.precision);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

GgmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string magic, version;
  in >> magic >> version;
  if (magic != "ggmac-model" || version != "v1") {
    throw std::runtime_error("'" + path + "' is not a ggmac-model v1 file");
  }
  GgmModel model;
  model.dim = std::stoi(expect_kv(in, "dim"));
  if (model.dim < 1) throw std::runtime_error("model file has nonpositive dim");
  model.seed = std::stoull(expect_kv(in, "seed"));
  const int max_degree = std::stoi(expect_kv(in, "max_degree"));
  const double theta_min = std::stod(expect_kv(in, "theta_min"));
  const std::string alpha = expect_kv(in, "alpha");
  std::string marker;
  in >> marker;
  if (marker != "theta") throw std::runtime_error("model file is missing the theta block");
  model.precision = read_matrix(in, model.dim, model.dim);

  Eigen::LLT<Eigen::MatrixXd> llt(model.precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("model file precision matrix is not positive definite");
  }
  model.covariance = llt.solve(Eigen::MatrixXd::Identity(model.dim, model.dim));
  fill_support_fields(model);
  if (model.max_degree != max_degree || std::abs(model.theta_min - theta_min) > 1e-12) {
    throw std::runtime_error("model file metadata does not match its theta entries");
  }
  if (alpha != "none") {
    model.alpha = std::stod(alpha);
    if (!(*model.alpha > 0.0 && *model.alpha <= 1.0)) {
      throw std::runtime_error("model file incoherence margin is outside (0, 1]");
    }
  }
  return model;
}

}  // namespace ggmac
