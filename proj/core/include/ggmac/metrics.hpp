#pragma once

#include <cstdint>

#include "ggmac/channel.hpp"
#include "ggmac/estimators.hpp"
#include "ggmac/model.hpp"
#include "ggmac/solver.hpp"

namespace ggmac {

// Seed-derivation tags fixing how pipeline_covariance and
// recovery_probability split their seeds: sample block i of a pipeline run
// draws with derive_seed(sample_seed, kSampleBlockTag, i) and its noise with
// derive_seed(noise_seed, kNoiseBlockTag, i); trial t of a recovery run uses
// derive_seed(seed, kTrialSampleTag/kTrialNoiseTag, t). Part of the
// reproducibility contract: changing them changes every published number.
inline constexpr long kPipelineBlockRows = 65536;  // even, so complex pairing never splits a block
inline constexpr std::uint64_t kSampleBlockTag = 0x73616d70ULL;
inline constexpr std::uint64_t kNoiseBlockTag = 0x6e6f6973ULL;
inline constexpr std::uint64_t kTrialSampleTag = 0x74727331ULL;
inline constexpr std::uint64_t kTrialNoiseTag = 0x74727332ULL;

struct RecoveryReport {
  double tpr = 1.0;  // 1 when the truth has no edges
  double fpr = 0.0;  // 0 when the truth is complete
  bool exact_recovery = false;
  bool sign_consistent = false;  // exact recovery plus matching precision signs
  int true_edges = 0;
  int predicted_edges = 0;
};

// Compares the estimated support against the ground-truth graph over
// unordered off-diagonal pairs. Throws std::invalid_argument on a dimension
// mismatch.
RecoveryReport score(const GgmModel& truth, const SolverResult& estimate);

// Sample-size thresholds from the recovery guarantees; the *_a thresholds
// rule out spurious edges, the *_b thresholds give full sign-consistent
// recovery. uncoded_tail is the channel constant from uncoded_tail_constant.
struct RecoveryThresholds {
  double c_sign = 0.0;
  double t_sign = 0.0;
  double c_uncoded = 0.0;
  double t_uncoded = 0.0;
  double n_min_sign_a = 0.0;
  double n_min_sign_b = 0.0;
  double n_min_uncoded_a = 0.0;
  double n_min_uncoded_b = 0.0;
};

// eps must lie in (0,1); the guarantees assume eps <= 1/dim^2, which callers
// are expected to warn about rather than this function enforcing it.
RecoveryThresholds recovery_thresholds(const ModelConstants& constants,
                                       const GgmModel& model,
                                       double uncoded_tail, double eps);

// One complete estimation pipeline: a method, the channel it runs over, and
// the solver settings (lambda taken from the dedicated field).
struct Pipeline {
  Method method = Method::original;
  ChannelSpec channel;
  double lambda = 0.1;
  SolverConfig solver;
};

// Streaming covariance estimate for n samples of the model through the
// pipeline's method and channel, accumulating Gram blocks so n can exceed
// memory. Sample and noise streams are seeded independently per block.
// For signs the rate-region admission runs first; callers looping trials over
// one already-admitted channel pass admission_checked to skip the recheck.
CovarianceEstimate pipeline_covariance(const GgmModel& model, Method method,
                                       const ChannelSpec& chan, long n,
                                       std::uint64_t sample_seed,
                                       std::uint64_t noise_seed,
                                       bool admission_checked = false);

// Fraction of trials achieving exact support recovery. Trials draw fresh
// samples and noise from seeds derived per trial index, so the result is
// independent of thread count. Signs admission control runs once up front.
double recovery_probability(const GgmModel& model, const Pipeline& pipe, long n,
                            int trials, std::uint64_t seed, int threads = 0);

}  // namespace ggmac
