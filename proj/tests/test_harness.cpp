#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "ggmac/harness.hpp"
#include "ggmac/metrics.hpp"

using namespace ggmac;

namespace {

const char* kSweepConfig = R"({
  "experiment": "sample_sweep",
  "model": {"type": "star", "rho": 0.5},
  "channel": {"h": "identity", "snr": 3.0},
  "methods": ["original", "signs", "uncoded"],
  "grid": [200, 400],
  "d": 5,
  "trials": 3,
  "graph_repeats": 1,
  "lambda": {"policy": "heuristic", "base": 0.15},
  "solver": {"max_sweeps": 100},
  "master_seed": 77,
  "threads": 2
})";

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  ExperimentConfig cfg = parse_config(kSweepConfig);
  CHECK(cfg.kind == ExperimentKind::sample_sweep);
  CHECK(cfg.model.type == ModelRecipe::Type::star);
  CHECK(cfg.model.rho == 0.5);
  CHECK(cfg.channel.gains == ChannelRecipe::Gains::identity);
  CHECK(cfg.channel.power == 3.0);
  CHECK(cfg.channel.noise_var == 1.0);
  REQUIRE(cfg.methods.size() == 3);
  CHECK(cfg.methods[0] == Method::original);
  CHECK(cfg.methods[1] == Method::signs);
  CHECK(cfg.methods[2] == Method::uncoded);
  CHECK(cfg.grid == std::vector<double>{200.0, 400.0});
  CHECK(cfg.dim == 5);
  CHECK(cfg.trials == 3);
  CHECK(cfg.lambda.kind == LambdaPolicy::Kind::heuristic);
  CHECK(cfg.lambda.base == 0.15);
  CHECK(cfg.solver.max_sweeps == 100);
  CHECK(cfg.master_seed == 77);
  CHECK(cfg.threads == 2);
  CHECK(cfg.source_text == kSweepConfig);
  CHECK(validate_config(cfg).ok());
}

TEST_CASE("config parsing rejects malformed documents") {
  CHECK_THROWS_WITH_AS((void)parse_config(R"({"experimnt": "single_run"})"),
                       doctest::Contains("experimnt"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      (void)parse_config(R"({"model": {"type": "star", "hub": 1}})"),
      doctest::Contains("hub"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      (void)parse_config(R"({"channel": {"snr": 2.0, "power": 1.0}})"),
      doctest::Contains("not both"), std::runtime_error);
  CHECK_THROWS((void)parse_config(R"({"methods": ["telepathy"]})"));
  CHECK_THROWS((void)parse_config("not json at all"));
  CHECK_THROWS_WITH_AS(
      (void)parse_config(R"({"model": {"type": "lattice"}})"),
      doctest::Contains("lattice"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      (void)parse_config(R"({"lambda": {"policy": "oracle"}})"),
      doctest::Contains("oracle"), std::runtime_error);
}

TEST_CASE("explicit channel gains") {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "single_run",
    "d": 2, "n": 100,
    "methods": ["original"],
    "channel": {"h": [[[1,0],[0,0.5]],[[0,-0.5],[1,0]]], "power": 2.0}
  })");
  CHECK(cfg.channel.gains == ChannelRecipe::Gains::explicit_entries);
  REQUIRE(cfg.channel.entries.size() == 2);
  CHECK(cfg.channel.entries[0][1] == std::complex<double>(0.0, 0.5));
  CHECK(cfg.channel.entries[1][0] == std::complex<double>(0.0, -0.5));
  CHECK(validate_config(cfg).ok());

  // Explicit gains must match the dimension being swept.
  cfg.dim = 3;
  CHECK_FALSE(validate_config(cfg).ok());
}

TEST_CASE("validation catches semantic problems") {
  ExperimentConfig cfg = parse_config(kSweepConfig);

  ExperimentConfig bad = cfg;
  bad.methods.clear();
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.methods = {Method::signs, Method::signs};
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.dim = 1;
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.model.rho = 1.0;
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.grid.clear();
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.grid = {200.5};
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.lambda.kind = LambdaPolicy::Kind::grid;
  bad.lambda.values.clear();
  CHECK_FALSE(validate_config(bad).ok());

  bad = cfg;
  bad.kind = ExperimentKind::star_recovery;
  bad.model.type = ModelRecipe::Type::random;
  CHECK_FALSE(validate_config(bad).ok());

  // Static admission check: one bit per machine does not fit at snr 0.3.
  bad = cfg;
  bad.channel.power = 0.3;
  ValidationReport rep = validate_config(bad);
  CHECK_FALSE(rep.ok());
  REQUIRE_FALSE(rep.violations.empty());
  bool found = false;
  for (const auto& v : rep.violations) {
    found = found || v.find("rate region") != std::string::npos;
  }
  CHECK(found);

  // Odd n with the uncoded method only warns.
  ExperimentConfig odd = cfg;
  odd.grid = {201};
  ValidationReport odd_rep = validate_config(odd);
  CHECK(odd_rep.ok());
  CHECK_FALSE(odd_rep.warnings.empty());
}

TEST_CASE("experiment run is deterministic and correctly shaped") {
  ExperimentConfig cfg = parse_config(kSweepConfig);

  std::ostringstream csv_a, csv_b;
  ExperimentSummary sum = run_experiment(cfg, csv_a);
  run_experiment(cfg, csv_b);
  CHECK(csv_a.str() == csv_b.str());

  // Different thread count, byte-identical output.
  cfg.threads = 1;
  std::ostringstream csv_c;
  run_experiment(cfg, csv_c);
  CHECK(csv_a.str() == csv_c.str());

  REQUIRE(sum.rows.size() == 18);  // 2 points x 3 trials x 3 methods
  CHECK(count_lines(csv_a.str()) == 18 + 3);  // banner, hash line, header
  CHECK(csv_a.str().rfind("# ggmac results v1\n", 0) == 0);

  CHECK(sum.rows[0].method == "original");
  CHECK(sum.rows[1].method == "signs");
  CHECK(sum.rows[2].method == "uncoded");
  CHECK(sum.rows[0].n == 200);
  CHECK(sum.rows[9].n == 400);
  CHECK(sum.rows[0].lambda == 0.15);
  CHECK(sum.rows[1].lambda == 0.6);
  for (const TrialRow& row : sum.rows) CHECK_FALSE(row.failed);

  // Same trial, different methods: the paired-sample seed is shared.
  CHECK(sum.rows[0].seed == sum.rows[1].seed);
  CHECK(sum.rows[0].seed == sum.rows[2].seed);
  CHECK(sum.rows[0].seed != sum.rows[3].seed);

  REQUIRE(sum.aggregates.size() == 6);
  for (const SummaryRow& agg : sum.aggregates) {
    CHECK(agg.trials == 3);
    CHECK(agg.failed == 0);
    CHECK(agg.mean_tpr >= 0.0);
    CHECK(agg.mean_tpr <= 1.0);
  }

  std::string table = summary_table(sum);
  CHECK(table.find("method") != std::string::npos);
  CHECK(table.find("signs") != std::string::npos);
  CHECK(table.find("tpr") != std::string::npos);

  std::string header(csv_header());
  CHECK(std::count(header.begin(), header.end(), ',') == 12);  // 13 columns
}

TEST_CASE("adding methods never changes existing methods' trials") {
  ExperimentConfig solo = parse_config(kSweepConfig);
  solo.methods = {Method::original};
  ExperimentConfig trio = parse_config(kSweepConfig);

  std::ostringstream csv_solo, csv_trio;
  ExperimentSummary a = run_experiment(solo, csv_solo);
  ExperimentSummary b = run_experiment(trio, csv_trio);

  std::vector<const TrialRow*> from_trio;
  for (const TrialRow& row : b.rows) {
    if (row.method == "original") from_trio.push_back(&row);
  }
  REQUIRE(from_trio.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].seed == from_trio[i]->seed);
    CHECK(a.rows[i].n == from_trio[i]->n);
    CHECK(a.rows[i].tpr == from_trio[i]->tpr);
    CHECK(a.rows[i].fpr == from_trio[i]->fpr);
    CHECK(a.rows[i].exact == from_trio[i]->exact);
  }
}

TEST_CASE("run aborts on validation violations") {
  ExperimentConfig cfg = parse_config(kSweepConfig);
  cfg.channel.power = 0.3;  // signs cannot be admitted
  std::ostringstream csv;
  CHECK_THROWS_WITH_AS((void)run_experiment(cfg, csv),
                       doctest::Contains("rate region"), std::invalid_argument);
}

TEST_CASE("runtime admission failures mark rows instead of aborting") {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "snr_sweep",
    "model": {"type": "random", "edge_prob": 0.3, "max_degree": 3},
    "channel": {"h": "rayleigh", "rayleigh_seed": 3},
    "methods": ["original", "signs"],
    "grid": [0.05],
    "d": 4, "n": 200, "trials": 2, "graph_repeats": 2,
    "lambda": {"policy": "heuristic", "base": 0.2},
    "master_seed": 5
  })");
  std::ostringstream csv;
  ExperimentSummary sum = run_experiment(cfg, csv);
  REQUIRE(sum.rows.size() == 8);
  int signs_failed = 0;
  for (const TrialRow& row : sum.rows) {
    if (row.method == "signs" && row.failed) ++signs_failed;
    if (row.method == "original") CHECK_FALSE(row.failed);
  }
  CHECK(signs_failed == 4);  // every signs trial at snr 0.05
  CHECK(csv.str().find("nan") != std::string::npos);

  for (const SummaryRow& agg : sum.aggregates) {
    if (agg.method == "signs") CHECK(agg.failed == 4);
  }
}

TEST_CASE("theoretical lambda policy is wired through") {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "single_run",
    "model": {"type": "star", "rho": 0.3},
    "channel": {"h": "identity", "snr": 3.0},
    "methods": ["original", "signs"],
    "d": 4, "n": 500, "trials": 1,
    "lambda": {"policy": "theoretical"},
    "master_seed": 9
  })");
  std::ostringstream csv;
  ExperimentSummary sum = run_experiment(cfg, csv);
  REQUIRE(sum.rows.size() == 2);

  GgmModel m = generate_star_model(4, 0.3);
  double alpha = compute_constants(m).alpha;
  double expect = theoretical_lambda(alpha, 500, 1.0 / 16.0);
  CHECK(sum.rows[0].lambda == doctest::Approx(expect).epsilon(1e-12));
  CHECK(sum.rows[1].lambda == sum.rows[0].lambda);  // same formula either way

  // The channel-aware variant kicks in for the uncoded method on request.
  ExperimentConfig unc = parse_config(R"({
    "experiment": "single_run",
    "model": {"type": "star", "rho": 0.3},
    "channel": {"h": "identity", "snr": 3.0},
    "methods": ["uncoded"],
    "d": 4, "n": 500, "trials": 1,
    "lambda": {"policy": "theoretical", "uncoded_tail_variant": true},
    "master_seed": 9
  })");
  std::ostringstream csv2;
  ExperimentSummary sum2 = run_experiment(unc, csv2);
  double tail = uncoded_tail_constant(build_real_block(identity_channel(4, 3.0, 1.0)));
  double expect2 = uncoded_theoretical_lambda(alpha, 500, 1.0 / 16.0, tail);
  REQUIRE(sum2.rows.size() == 1);
  CHECK(sum2.rows[0].lambda == doctest::Approx(expect2).epsilon(1e-12));
}

TEST_CASE("grid lambda calibration scales per method") {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "single_run",
    "model": {"type": "star", "rho": 0.5},
    "channel": {"h": "identity", "snr": 3.0},
    "methods": ["original", "signs", "uncoded"],
    "d": 6, "n": 2000, "trials": 2,
    "lambda": {"policy": "grid", "values": [0.05, 0.2, 0.8]},
    "master_seed": 21
  })");
  std::ostringstream csv;
  ExperimentSummary sum = run_experiment(cfg, csv);
  REQUIRE(sum.rows.size() == 6);
  double base = sum.rows[0].lambda;
  CHECK((base == 0.05 || base == 0.2 || base == 0.8));
  CHECK(sum.rows[1].lambda == doctest::Approx(4.0 * base).epsilon(1e-15));
  CHECK(sum.rows[2].lambda == doctest::Approx(2.0 / 3.0 * base).epsilon(1e-15));
}

}  // TEST_SUITE
