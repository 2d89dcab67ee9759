// Command line front end: model generation, experiment runs, config
// validation, sample-size bounds and one-shot solves.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "ggmac/harness.hpp"
#include "ggmac/matrix_io.hpp"
#include "ggmac/metrics.hpp"
#include "ggmac/model.hpp"
#include "ggmac/parallel.hpp"
#include "ggmac/solver.hpp"

namespace {

struct ModelFlags {
  int d = 20;
  bool star = false;
  double rho = 0.25;
  double edge_prob = 0.1;
  int max_degree = 5;
  double weight_low = -1.0;
  double weight_high = 1.0;
  std::uint64_t seed = 1;
  bool no_incoherence = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--d", f.d, "model dimension");
  cmd->add_flag("--star", f.star, "star graph instead of a random graph");
  cmd->add_option("--rho", f.rho, "star hub-leaf correlation");
  cmd->add_option("--edge-prob", f.edge_prob, "random graph edge probability");
  cmd->add_option("--max-degree", f.max_degree, "random graph degree cap");
  cmd->add_option("--weight-low", f.weight_low, "edge weight lower bound");
  cmd->add_option("--weight-high", f.weight_high, "edge weight upper bound");
  cmd->add_option("--seed", f.seed, "generation seed");
  cmd->add_flag("--no-incoherence", f.no_incoherence,
                "skip the incoherence screening of random graphs");
}

ggmac::GgmModel model_from_flags(const ModelFlags& f) {
  if (f.star) return ggmac::generate_star_model(f.d, f.rho);
  ggmac::RandomModelOptions opts;
  opts.require_incoherence = !f.no_incoherence;
  return ggmac::generate_random_model(f.d, f.edge_prob, f.max_degree, f.weight_low,
                                      f.weight_high, f.seed, opts);
}

// ggmac-covariance file, or a bare whitespace-separated square matrix.
ggmac::CovarianceEstimate read_solver_input(const std::string& path) {
  {
    std::ifstream probe(path);
    if (!probe) throw std::runtime_error("cannot open '" + path + "'");
    std::string magic;
    probe >> magic;
    if (magic == "ggmac-covariance") return ggmac::load_covariance(path);
  }
  std::ifstream in(path);
  std::string first_line;
  std::getline(in, first_line);
  std::istringstream head(first_line);
  int d = 0;
  double v;
  while (head >> v) ++d;
  if (d < 1) throw std::runtime_error("'" + path + "' does not look like a matrix");
  in.seekg(0);
  ggmac::CovarianceEstimate est;
  est.matrix = ggmac::read_matrix(in, d, d);
  est.n_used = 1;  // unknown provenance; treated as a raw input
  ggmac::validate_estimate(est);
  return est;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge structure learning over a Gaussian multiple-access channel"};
  app.require_subcommand(1);

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "generate a ground-truth model file");
  ModelFlags gen_flags;
  add_model_flags(gen, gen_flags);
  std::string gen_out = "model.txt";
  gen->add_option("--out", gen_out, "output path");

  // run
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string run_config;
  run->add_option("config", run_config, "JSON experiment config")->required();
  std::string run_output;
  run->add_option("--output", run_output, "CSV path (overrides the config)");
  int run_threads = 0;
  run->add_option("--threads", run_threads, "worker threads (0 = auto)");

  // validate
  auto* val = app.add_subcommand("validate", "check a config without running it");
  std::string val_config;
  val->add_option("config", val_config, "JSON experiment config")->required();

  // bounds
  auto* bounds = app.add_subcommand("bounds", "sample-size thresholds for a model");
  ModelFlags bounds_flags;
  add_model_flags(bounds, bounds_flags);
  std::string bounds_model;
  bounds->add_option("--model", bounds_model, "model file (instead of generation flags)");
  double bounds_eps = 0.0;
  bounds->add_option("--epsilon", bounds_eps, "failure probability (default 1/d^2)");
  double bounds_power = 3.0, bounds_noise = 1.0;
  bounds->add_option("--power", bounds_power, "channel power for the uncoded constant");
  bounds->add_option("--noise-var", bounds_noise, "noise variance per real component");

  // solve
  auto* solve = app.add_subcommand("solve", "run the solver on a covariance file");
  std::string solve_input;
  solve->add_option("input", solve_input, "covariance file or bare matrix")->required();
  ggmac::SolverConfig solve_cfg;
  solve->add_option("--lambda", solve_cfg.lambda, "regularization")->required();
  solve->add_option("--max-sweeps", solve_cfg.max_sweeps, "sweep cap");
  solve->add_option("--duality-tol", solve_cfg.duality_tol, "outer tolerance");
  solve->add_option("--inner-tol", solve_cfg.inner_tol, "coordinate descent tolerance");
  solve->add_option("--edge-threshold", solve_cfg.edge_threshold, "support threshold");
  std::string solve_out;
  solve->add_option("--out", solve_out, "write the precision estimate here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ggmac::GgmModel model = model_from_flags(gen_flags);
      ggmac::validate_model(model);
      ggmac::save_model(model, gen_out);
      std::cout << "wrote " << gen_out << ": d=" << model.dim << ", edges="
                << ggmac::undirected_edges(model).size() << ", max_degree="
                << model.max_degree << ", theta_min=" << model.theta_min;
      if (model.alpha) std::cout << ", alpha=" << *model.alpha;
      std::cout << "\n";
      return 0;
    }

    if (run->parsed()) {
      ggmac::ExperimentConfig cfg = ggmac::load_config(run_config);
      if (!run_output.empty()) cfg.output = run_output;
      if (run_threads > 0) cfg.threads = run_threads;

      ggmac::ExperimentSummary summary;
      if (cfg.output.empty()) {
        summary = ggmac::run_experiment(cfg, std::cout);
        std::cerr << ggmac::summary_table(summary);
      } else {
        std::ofstream out(cfg.output);
        if (!out) throw std::runtime_error("cannot open '" + cfg.output + "' for writing");
        summary = ggmac::run_experiment(cfg, out);
        std::cout << ggmac::summary_table(summary);
        std::cout << "rows written to " << cfg.output << "\n";
      }
      return 0;
    }

    if (val->parsed()) {
      ggmac::ExperimentConfig cfg = ggmac::load_config(val_config);
      ggmac::ValidationReport report = ggmac::validate_config(cfg);
      for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
      for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
      if (!report.ok()) return 1;
      std::cout << "config ok\n";
      return 0;
    }

    if (bounds->parsed()) {
      ggmac::GgmModel model = bounds_model.empty() ? model_from_flags(bounds_flags)
                                                   : ggmac::load_model(bounds_model);
      ggmac::ModelConstants mc = ggmac::compute_constants(model);
      ggmac::ChannelSpec chan =
          ggmac::identity_channel(model.dim, bounds_power, bounds_noise);
      const double tail = ggmac::uncoded_tail_constant(ggmac::build_real_block(chan));
      const double eps = bounds_eps > 0.0
                             ? bounds_eps
                             : 1.0 / (static_cast<double>(model.dim) * model.dim);
      ggmac::RecoveryThresholds th = ggmac::recovery_thresholds(mc, model, tail, eps);
      std::cout << "d " << model.dim << "\n"
                << "alpha " << mc.alpha << "\n"
                << "kappa_sigma " << mc.kappa_sigma << "\n"
                << "kappa_gamma " << mc.kappa_gamma << "\n"
                << "theta_min " << model.theta_min << "\n"
                << "max_degree " << model.max_degree << "\n"
                << "epsilon " << eps << "\n"
                << "uncoded_tail_constant " << tail << "\n"
                << "n_min_sign_edge_screen " << th.n_min_sign_a << "\n"
                << "n_min_sign_full_recovery " << th.n_min_sign_b << "\n"
                << "n_min_uncoded_edge_screen " << th.n_min_uncoded_a << "\n"
                << "n_min_uncoded_full_recovery " << th.n_min_uncoded_b << "\n";
      return 0;
    }

    if (solve->parsed()) {
      ggmac::CovarianceEstimate est = read_solver_input(solve_input);
      ggmac::SolverResult res = ggmac::glasso_solve(est, solve_cfg);
      ggmac::KktReport kkt = ggmac::kkt_residuals(est, solve_cfg.lambda, res);
      std::cout << "converged " << (res.converged ? "yes" : "no") << " in "
                << res.sweeps_used << " sweeps\n"
                << "objective " << res.objective_trace.back() << "\n"
                << "edges " << res.edges.size() << "\n";
      for (const auto& [j, k] : res.edges) std::cout << "  " << j << " " << k << "\n";
      std::cout << "kkt_edge_residual " << kkt.max_edge_residual << "\n"
                << "kkt_nonedge_excess " << kkt.max_nonedge_excess << "\n";
      if (!solve_out.empty()) {
        std::ofstream out(solve_out);
        if (!out) throw std::runtime_error("cannot open '" + solve_out + "' for writing");
        ggmac::write_matrix(out, res.theta);
        std::cout << "precision estimate written to " << solve_out << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
