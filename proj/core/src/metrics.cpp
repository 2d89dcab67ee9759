#include "ggmac/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "ggmac/parallel.hpp"
#include "ggmac/rng.hpp"

namespace ggmac {

namespace {

constexpr long kBlockRows = kPipelineBlockRows;

}  // namespace

RecoveryReport score(const GgmModel& truth, const SolverResult& estimate) {
  const int d = truth.dim;
  if (estimate.theta.rows() != d) {
    throw std::invalid_argument("score: estimate dimension does not match the model");
  }

  std::set<std::pair<int, int>> true_edges;
  for (const auto& e : undirected_edges(truth)) true_edges.insert(e);

  RecoveryReport report;
  report.true_edges = static_cast<int>(true_edges.size());
  report.predicted_edges = static_cast<int>(estimate.edges.size());

  int tp = 0, fp = 0;
  bool signs_ok = true;
  for (const auto& e : estimate.edges) {
    if (true_edges.count(e)) {
      ++tp;
      const double t = truth.precision(e.first, e.second);
      const double h = estimate.theta(e.first, e.second);
      if ((t > 0.0) != (h > 0.0)) signs_ok = false;
    } else {
      ++fp;
    }
  }

  const long pairs = static_cast<long>(d) * (d - 1) / 2;
  const long non_edges = pairs - report.true_edges;
  report.tpr = report.true_edges ? static_cast<double>(tp) / report.true_edges : 1.0;
  report.fpr = non_edges ? static_cast<double>(fp) / non_edges : 0.0;
  report.exact_recovery = (tp == report.true_edges) && fp == 0;
  report.sign_consistent = report.exact_recovery && signs_ok;
  return report;
}

RecoveryThresholds recovery_thresholds(const ModelConstants& constants,
                                       const GgmModel& model,
                                       double uncoded_tail, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("recovery_thresholds: eps must lie in (0, 1)");
  }
  if (!(uncoded_tail > 0.0)) {
    throw std::invalid_argument("recovery_thresholds: tail constant must be positive");
  }
  const double ks = constants.kappa_sigma;
  const double kg = constants.kappa_gamma;
  const double kmax = std::max(ks * kg, ks * ks * ks * kg * kg);
  const double degree = static_cast<double>(model.max_degree);
  // Edgeless models have theta_min = 0; the sign-consistency term then has no
  // edge to resolve and drops out.
  const double theta_term = model.theta_min > 0.0 ? kg / model.theta_min : 0.0;
  const double sqrt2 = std::sqrt(2.0);
  const double pi = std::numbers::pi;

  RecoveryThresholds out;
  out.c_sign = 3.0 * sqrt2 * pi * kmax;
  out.t_sign = sqrt2 * pi * std::max(theta_term, 3.0 * degree * kmax);
  const double root_c = std::sqrt(2.0 * uncoded_tail);
  out.c_uncoded = 6.0 * root_c * kmax;
  out.t_uncoded = 2.0 * root_c * std::max(theta_term, 3.0 * degree * kmax);

  const double f = 1.0 + 8.0 / constants.alpha;
  const double factor = f * f;
  const double log_sign = std::log(2.0 / eps);
  const double log_uncoded = std::log(8.0 / eps);
  out.n_min_sign_a = out.c_sign * out.c_sign * degree * degree * factor * log_sign;
  out.n_min_sign_b = out.t_sign * out.t_sign * factor * log_sign;
  out.n_min_uncoded_a = out.c_uncoded * out.c_uncoded * degree * degree * factor * log_uncoded;
  out.n_min_uncoded_b = out.t_uncoded * out.t_uncoded * factor * log_uncoded;
  return out;
}

CovarianceEstimate pipeline_covariance(const GgmModel& model, Method method,
                                       const ChannelSpec& chan, long n,
                                       std::uint64_t sample_seed,
                                       std::uint64_t noise_seed,
                                       bool admission_checked) {
  if (n < 1) throw std::invalid_argument("pipeline_covariance: n must be positive");
  const int d = model.dim;

  if (method == Method::original) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    long done = 0;
    std::uint64_t block = 0;
    while (done < n) {
      const long b = std::min(kBlockRows, n - done);
      SampleMatrix x = sample(model, b, derive_seed(sample_seed, kSampleBlockTag, block));
      gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0);
      done += b;
      ++block;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    CovarianceEstimate est;
    est.matrix = gram / static_cast<double>(n);
    est.method = Method::original;
    est.n_used = n;
    return est;
  }

  if (chan.gains.rows() != d) {
    throw std::invalid_argument("pipeline_covariance: channel does not match the model");
  }

  if (method == Method::signs) {
    if (!admission_checked && chan.noise_var > 0.0) {
      RateRegionReport rep = rate_region_feasible(chan, Eigen::VectorXd::Ones(d));
      if (!rep.feasible) {
        throw std::runtime_error("rate region violated: 1 bit per machine does not fit");
      }
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    long done = 0;
    std::uint64_t block = 0;
    while (done < n) {
      const long b = std::min(kBlockRows, n - done);
      SampleMatrix x = sample(model, b, derive_seed(sample_seed, kSampleBlockTag, block));
      SignMatrix bits = sign_quantize(x);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(bits.transpose(), 1.0);
      done += b;
      ++block;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    return signs_covariance_from_gram(gram, n);
  }

  // uncoded
  long n_even = n;
  if (n_even % 2) {
    std::cerr << "pipeline_covariance: odd sample count, dropping the last sample\n";
    --n_even;
  }
  if (n_even < 2) throw std::invalid_argument("uncoded pipeline needs at least two samples");
  const RealBlockChannel rb = build_real_block(chan);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  long done = 0;
  long rows = 0;
  std::uint64_t block = 0;
  while (done < n_even) {
    const long b = std::min(kBlockRows, n_even - done);
    SampleMatrix x = sample(model, b, derive_seed(sample_seed, kSampleBlockTag, block));
    ReceivedMatrix y = transmit_uncoded(x, rb, derive_seed(noise_seed, kNoiseBlockTag, block));
    gram.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0);
    rows += y.rows();
    done += b;
    ++block;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  return uncoded_covariance_from_gram(gram, rows, rb);
}

double recovery_probability(const GgmModel& model, const Pipeline& pipe, long n,
                            int trials, std::uint64_t seed, int threads) {
  if (trials < 1) throw std::invalid_argument("recovery_probability: trials must be positive");
  if (pipe.method == Method::signs && pipe.channel.noise_var > 0.0) {
    RateRegionReport rep =
        rate_region_feasible(pipe.channel, Eigen::VectorXd::Ones(model.dim));
    if (!rep.feasible) {
      throw std::runtime_error("rate region violated: 1 bit per machine does not fit");
    }
  }

  std::atomic<int> hits{0};
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        const std::uint64_t ss = derive_seed(seed, kTrialSampleTag, t);
        const std::uint64_t ns = derive_seed(seed, kTrialNoiseTag, t);
        CovarianceEstimate est =
            pipeline_covariance(model, pipe.method, pipe.channel, n, ss, ns, true);
        SolverConfig cfg = pipe.solver;
        cfg.lambda = pipe.lambda;
        SolverResult res = glasso_solve(est, cfg);
        if (score(model, res).exact_recovery) hits.fetch_add(1);
      },
      threads);
  return static_cast<double>(hits.load()) / static_cast<double>(trials);
}

}  // namespace ggmac
