#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ggmac/estimators.hpp"
#include "ggmac/metrics.hpp"
#include "ggmac/solver.hpp"

namespace ggmac {

enum class ExperimentKind { single_run, dim_sweep, sample_sweep, star_recovery, snr_sweep };

const char* to_string(ExperimentKind k);

struct ModelRecipe {
  enum class Type { random, star } type = Type::random;
  double edge_prob = 0.1;
  int max_degree = 5;
  double weight_low = -1.0;
  double weight_high = 1.0;
  double rho = 0.25;  // star hub-leaf correlation
};

struct ChannelRecipe {
  enum class Gains { identity, rayleigh, explicit_entries } gains = Gains::identity;
  std::uint64_t rayleigh_seed = 1;
  bool complex_fading = false;
  std::vector<std::vector<std::complex<double>>> entries;  // explicit gains, row major
  double power = 1.0;
  double noise_var = 1.0;
};

struct LambdaPolicy {
  enum class Kind { theoretical, heuristic, grid } kind = Kind::heuristic;
  double base = 0.1;          // heuristic: scaled per method
  std::vector<double> values; // grid: calibrated on the plain pipeline per graph
  double epsilon = 0.0;       // theoretical: 0 means 1/d^2
  bool uncoded_tail_variant = false;  // theoretical: channel-aware uncoded scale
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  ModelRecipe model;
  ChannelRecipe channel;
  std::vector<Method> methods;
  std::vector<double> grid;  // d, n or SNR values depending on kind
  int dim = 20;
  long n = 1000;
  int trials = 10;
  int graph_repeats = 1;     // fresh graphs per point (channel redraws for snr_sweep)
  LambdaPolicy lambda;
  SolverConfig solver;       // lambda field is filled per method at run time
  std::uint64_t master_seed = 1;
  std::string output;        // CSV path; empty writes to stdout
  int threads = 0;           // 0 = GGMAC_THREADS env or hardware
  std::string source_text;   // raw config document, hashed into the CSV header
};

// Parses the JSON experiment description. Unknown keys and type mismatches
// throw std::runtime_error naming the offending key.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

// Structural and semantic checks, including static-channel rate-region
// admission for the signs method. Never throws on bad configs; all findings
// are returned.
ValidationReport validate_config(const ExperimentConfig& cfg);

struct TrialRow {
  std::string method;
  int d = 0;
  long n = 0;
  double snr = 0.0;
  std::uint64_t seed = 0;  // sample seed of the trial
  double tpr = 0.0;
  double fpr = 0.0;
  bool exact = false;
  bool sign_consistent = false;
  double lambda = 0.0;
  int sweeps = 0;
  bool converged = false;
  int clamps = 0;
  bool failed = false;  // pipeline-level failure (e.g. admission), row kept
};

struct SummaryRow {
  std::string method;
  int d = 0;
  long n = 0;
  double snr = 0.0;
  int trials = 0;
  int failed = 0;
  double mean_tpr = 0.0;
  double mean_fpr = 0.0;
  double exact_rate = 0.0;
  double sign_consistent_rate = 0.0;
  double mean_sweeps = 0.0;
  double converged_rate = 0.0;
};

struct ExperimentSummary {
  std::vector<TrialRow> rows;
  std::vector<SummaryRow> aggregates;
};

// Aligned human-readable table of the aggregates.
std::string summary_table(const ExperimentSummary& summary);

// Runs the experiment and writes one CSV row per (trial, method) to csv_out.
// Rows are buffered into a deterministic order before writing, so the CSV is
// byte-identical across runs and thread counts for a fixed config. Per-point
// wall times go to stderr. Aborts (std::invalid_argument) if validate_config
// reports violations; per-trial failures never abort the sweep.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& csv_out);

const char* csv_header();

}  // namespace ggmac
