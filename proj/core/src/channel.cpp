#include "ggmac/channel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ggmac/rng.hpp"

namespace ggmac {

namespace {

// log2 det(I + snr * G_TT) for the subset encoded in mask; G is Hermitian PSD.
double subset_capacity(const Eigen::MatrixXcd& g, double snr_val,
                       const std::vector<int>& members) {
  const Eigen::Index t = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXcd m(t, t);
  for (Eigen::Index a = 0; a < t; ++a) {
    for (Eigen::Index b = 0; b < t; ++b) {
      m(a, b) = snr_val * g(members[a], members[b]);
    }
    m(a, a) += 1.0;
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("capacity Gram form is not positive definite");
  }
  return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum() / std::log(2.0);
}

void consider_subset(const Eigen::MatrixXcd& g, double snr_val,
                     const Eigen::VectorXd& rates, const std::vector<int>& members,
                     RateRegionReport& report) {
  double sum = 0.0;
  for (int i : members) sum += rates(i);
  double slack = subset_capacity(g, snr_val, members) - sum;
  if (slack < report.slack) {
    report.slack = slack;
    report.tightest_subset = members;
  }
}

}  // namespace

ChannelSpec identity_channel(int dim, double power, double noise_var) {
  ChannelSpec chan;
  chan.gains = Eigen::MatrixXcd::Identity(dim, dim);
  chan.power = power;
  chan.noise_var = noise_var;
  validate_channel(chan);
  return chan;
}

ChannelSpec rayleigh_channel(int dim, double power, double noise_var,
                             std::uint64_t seed, bool complex_entries) {
  ChannelSpec chan;
  chan.gains.resize(dim, dim);
  Rng rng(seed);
  const double s = std::sqrt(0.5);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      if (complex_entries) {
        double re = s * rng.normal();
        double im = s * rng.normal();
        chan.gains(i, j) = {re, im};
      } else {
        chan.gains(i, j) = rng.normal();
      }
    }
  }
  chan.power = power;
  chan.noise_var = noise_var;
  validate_channel(chan);
  return chan;
}

double snr(const ChannelSpec& chan) {
  if (chan.noise_var == 0.0) return std::numeric_limits<double>::infinity();
  return chan.power / chan.noise_var;
}

void validate_channel(const ChannelSpec& chan) {
  if (chan.gains.rows() < 1 || chan.gains.rows() != chan.gains.cols()) {
    throw std::runtime_error("channel gains must be a nonempty square matrix");
  }
  if (!(chan.power > 0.0)) throw std::runtime_error("channel power must be positive");
  if (!(chan.noise_var >= 0.0)) throw std::runtime_error("noise variance must be nonnegative");
}

RealBlockChannel build_real_block(const ChannelSpec& chan) {
  validate_channel(chan);
  const Eigen::Index d = chan.gains.rows();
  const double a = std::sqrt(chan.power / 2.0);

  RealBlockChannel rb;
  rb.mixing.resize(2 * d, 2 * d);
  rb.mixing.topLeftCorner(d, d) = a * chan.gains.real();
  rb.mixing.topRightCorner(d, d) = -a * chan.gains.imag();
  rb.mixing.bottomLeftCorner(d, d) = a * chan.gains.imag();
  rb.mixing.bottomRightCorner(d, d) = a * chan.gains.real();
  rb.noise_var = chan.noise_var;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(rb.mixing);
  rb.sigma_min = svd.singularValues().minCoeff();
  const double sigma_max = svd.singularValues().maxCoeff();
  if (!(rb.sigma_min > sigma_max * 1e-13)) {
    std::ostringstream msg;
    msg << "channel mixing matrix is numerically singular (sigma_min=" << rb.sigma_min
        << ", sigma_max=" << sigma_max << ")";
    throw std::runtime_error(msg.str());
  }
  rb.mixing_inv = rb.mixing.partialPivLu().inverse();
  return rb;
}

RateRegionReport rate_region_feasible(const ChannelSpec& chan,
                                      const Eigen::VectorXd& rates) {
  validate_channel(chan);
  const int d = static_cast<int>(chan.gains.rows());
  if (rates.size() != d) throw std::invalid_argument("one rate per machine required");
  if (rates.minCoeff() < 0.0) throw std::invalid_argument("rates must be nonnegative");
  if (chan.noise_var == 0.0) {
    throw std::runtime_error(
        "rate region is unconstrained: noiseless channel has unbounded capacity");
  }

  const Eigen::MatrixXcd g = chan.gains.adjoint() * chan.gains;
  const double snr_val = snr(chan);

  RateRegionReport report;
  report.slack = std::numeric_limits<double>::infinity();

  Eigen::MatrixXcd off = g;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    // Diagonal Gram: every subset constraint is the sum of its singleton
    // constraints, so feasibility reduces to the per-machine checks and the
    // tightest subset is the singleton (feasible case) or the union of all
    // violated machines.
    report.exhaustive = true;
    double worst_single = std::numeric_limits<double>::infinity();
    int worst_machine = 0;
    double violated_sum = 0.0;
    std::vector<int> violated;
    for (int i = 0; i < d; ++i) {
      const double slack_i =
          std::log2(1.0 + snr_val * g(i, i).real()) - rates(i);
      if (slack_i < worst_single) {
        worst_single = slack_i;
        worst_machine = i;
      }
      if (slack_i < 0.0) {
        violated.push_back(i);
        violated_sum += slack_i;
      }
    }
    if (violated.empty()) {
      report.slack = worst_single;
      report.tightest_subset = {worst_machine};
    } else {
      report.slack = violated_sum;
      report.tightest_subset = violated;
    }
    report.feasible = violated.empty();
    return report;
  }

  if (d <= 20) {
    std::vector<int> members;
    members.reserve(d);
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
      members.clear();
      for (int i = 0; i < d; ++i) {
        if (mask & (1u << i)) members.push_back(i);
      }
      consider_subset(g, snr_val, rates, members, report);
    }
    report.exhaustive = true;
  } else {
    // Exhaustive enumeration is out of reach; check all singletons and pairs,
    // the full set, and a fixed pseudo-random family of larger subsets.
    report.exhaustive = false;
    std::vector<int> members;
    for (int i = 0; i < d; ++i) consider_subset(g, snr_val, rates, {i}, report);
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) consider_subset(g, snr_val, rates, {i, j}, report);
    }
    std::vector<int> all(d);
    for (int i = 0; i < d; ++i) all[i] = i;
    consider_subset(g, snr_val, rates, all, report);

    Rng rng(0x5bbce7u);  // fixed: the sampled family must not vary between calls
    for (int rep = 0; rep < 256; ++rep) {
      std::uniform_int_distribution<int> size_pick(2, d - 1);
      int size = size_pick(rng.engine());
      std::vector<int> pool = all;
      for (int i = 0; i < size; ++i) {
        std::uniform_int_distribution<int> pick(i, d - 1);
        std::swap(pool[i], pool[pick(rng.engine())]);
      }
      members.assign(pool.begin(), pool.begin() + size);
      std::sort(members.begin(), members.end());
      consider_subset(g, snr_val, rates, members, report);
    }
  }

  report.feasible = report.slack >= 0.0;
  return report;
}

ReceivedMatrix transmit_uncoded(const SampleMatrix& samples, const ChannelSpec& chan,
                                std::uint64_t noise_seed) {
  return transmit_uncoded(samples, build_real_block(chan), noise_seed);
}

ReceivedMatrix transmit_uncoded(const SampleMatrix& samples, const RealBlockChannel& rb,
                                std::uint64_t noise_seed) {
  const Eigen::Index d = rb.mixing.rows() / 2;
  if (samples.cols() != d) {
    throw std::invalid_argument("sample dimension does not match the channel");
  }
  long n = samples.rows();
  if (n < 2) throw std::invalid_argument("uncoded transmission needs at least two samples");
  if (n % 2) {
    std::cerr << "transmit_uncoded: odd sample count, dropping the last sample\n";
    --n;
  }
  const long rows = n / 2;

  Eigen::MatrixXd stacked(rows, 2 * d);
  for (long i = 0; i < rows; ++i) {
    stacked.row(i).head(d) = samples.row(2 * i);
    stacked.row(i).tail(d) = samples.row(2 * i + 1);
  }

  ReceivedMatrix received = stacked * rb.mixing.transpose();
  if (rb.noise_var > 0.0) {
    const double sz = std::sqrt(rb.noise_var);
    Rng rng(noise_seed);
    for (Eigen::Index j = 0; j < received.cols(); ++j) {
      for (long i = 0; i < rows; ++i) received(i, j) += sz * rng.normal();
    }
  }
  return received;
}

SignMatrix transport_signs(const SignMatrix& bits, const ChannelSpec& chan) {
  validate_channel(chan);
  if (bits.cols() != chan.gains.rows()) {
    throw std::invalid_argument("bit stream dimension does not match the channel");
  }
  // One bit per machine per channel use; a noiseless channel admits anything.
  if (chan.noise_var > 0.0) {
    const int d = static_cast<int>(chan.gains.rows());
    RateRegionReport report = rate_region_feasible(chan, Eigen::VectorXd::Ones(d));
    if (!report.feasible) {
      std::ostringstream msg;
      msg << "rate region violated: 1 bit per machine exceeds capacity by "
          << -report.slack << " bits on a subset of " << report.tightest_subset.size()
          << " machines";
      throw std::runtime_error(msg.str());
    }
  }
  return bits;
}

}  // namespace ggmac
