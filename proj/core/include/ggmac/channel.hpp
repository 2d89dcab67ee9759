#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "ggmac/types.hpp"

namespace ggmac {

// Multiple-access channel between the machines and the fusion center: as many
// receive antennas as machines, complex gains H, per-machine average transmit
// power and per-real-component noise variance.
struct ChannelSpec {
  Eigen::MatrixXcd gains;
  double power = 1.0;
  double noise_var = 1.0;
};

ChannelSpec identity_channel(int dim, double power, double noise_var);

// Fading draw. By default entries are real standard normal; complex_entries
// draws independent real and imaginary parts with variance 1/2 each.
ChannelSpec rayleigh_channel(int dim, double power, double noise_var,
                             std::uint64_t seed, bool complex_entries = false);

// power / noise_var; infinity when noiseless.
double snr(const ChannelSpec& chan);

// Square gains, positive power, nonnegative noise. Throws std::runtime_error.
void validate_channel(const ChannelSpec& chan);

// Real expansion of the complex channel. Two consecutive real sample vectors
// are carried as the real and imaginary parts of one complex symbol block, so
// the effective mixing is sqrt(p/2) * [[Re H, -Im H], [Im H, Re H]].
struct RealBlockChannel {
  Eigen::MatrixXd mixing;      // 2d x 2d
  Eigen::MatrixXd mixing_inv;
  double sigma_min = 0.0;      // smallest singular value of the mixing matrix
  double noise_var = 0.0;      // per real receive component
};

// Throws std::runtime_error if the mixing matrix is numerically singular.
RealBlockChannel build_real_block(const ChannelSpec& chan);

struct RateRegionReport {
  bool feasible = false;
  // False when dim > 20 and only singletons plus the full set were checked.
  bool exhaustive = true;
  std::vector<int> tightest_subset;  // machines in the binding sum-rate constraint
  double slack = 0.0;                // capacity minus rate sum there; negative = violated
};

// Checks the requested per-machine rates against the sum-capacity constraint
// of every machine subset (capacity = log2 det of the subset Gram form of the
// gains at the given SNR). Exhaustive up to dim = 20, sampled above that.
// Throws std::runtime_error when noise_var == 0: the region is unconstrained
// and feasibility is trivially true but no finite capacity exists to report.
RateRegionReport rate_region_feasible(const ChannelSpec& chan,
                                      const Eigen::VectorXd& rates);

// Uncoded analog transmission of the samples: rows are paired into complex
// symbols, mixed by the real block channel and perturbed by white Gaussian
// noise of variance noise_var per real component. An odd trailing sample is
// dropped with a warning on stderr. Returns (n/2) x 2d receive rows.
ReceivedMatrix transmit_uncoded(const SampleMatrix& samples,
                                const ChannelSpec& chan,
                                std::uint64_t noise_seed);
ReceivedMatrix transmit_uncoded(const SampleMatrix& samples,
                                const RealBlockChannel& chan,
                                std::uint64_t noise_seed);

// Digital transport of one sign bit per machine per sample. Admission control:
// throws std::runtime_error("rate region violated...") unless one bit per
// machine per channel use fits the rate region (always admitted if noiseless).
// Inside the region the bits arrive intact.
SignMatrix transport_signs(const SignMatrix& bits, const ChannelSpec& chan);

}  // namespace ggmac
