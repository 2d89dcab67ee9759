#include "ggmac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ggmac/matrix_io.hpp"
#include "ggmac/parallel.hpp"
#include "ggmac/rng.hpp"

namespace ggmac {

namespace {

using nlohmann::json;

constexpr std::uint64_t kGraphTag = 0x67726170ULL;
constexpr std::uint64_t kChanTag = 0x6368616eULL;
constexpr std::uint64_t kSampleTag = 0x73616d70ULL;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;
constexpr std::uint64_t kCalibrationTag = 0x63616c69ULL;

std::mutex log_mutex;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

ExperimentKind kind_from_string(const std::string& s) {
  if (s == "single_run") return ExperimentKind::single_run;
  if (s == "dim_sweep") return ExperimentKind::dim_sweep;
  if (s == "sample_sweep") return ExperimentKind::sample_sweep;
  if (s == "star_recovery") return ExperimentKind::star_recovery;
  if (s == "snr_sweep") return ExperimentKind::snr_sweep;
  throw std::runtime_error("config: unknown experiment kind '" + s + "'");
}

struct Point {
  int d = 0;
  long n = 0;
  double power = 0.0;
  double noise_var = 1.0;
  double snr = 0.0;
};

std::vector<Point> resolve_points(const ExperimentConfig& cfg) {
  auto base_point = [&](int d, long n, double power) {
    Point p;
    p.d = d;
    p.n = n;
    p.power = power;
    p.noise_var = cfg.channel.noise_var;
    p.snr = p.noise_var > 0.0 ? p.power / p.noise_var
                              : std::numeric_limits<double>::infinity();
    return p;
  };

  std::vector<Point> points;
  switch (cfg.kind) {
    case ExperimentKind::single_run:
      points.push_back(base_point(cfg.dim, cfg.n, cfg.channel.power));
      break;
    case ExperimentKind::dim_sweep:
      for (double v : cfg.grid) {
        points.push_back(base_point(static_cast<int>(v), cfg.n, cfg.channel.power));
      }
      break;
    case ExperimentKind::sample_sweep:
    case ExperimentKind::star_recovery:
      for (double v : cfg.grid) {
        points.push_back(base_point(cfg.dim, static_cast<long>(v), cfg.channel.power));
      }
      break;
    case ExperimentKind::snr_sweep:
      for (double v : cfg.grid) {
        points.push_back(base_point(cfg.dim, cfg.n, v * cfg.channel.noise_var));
      }
      break;
  }
  return points;
}

bool models_shared_across_points(ExperimentKind k) {
  return k == ExperimentKind::sample_sweep || k == ExperimentKind::star_recovery ||
         k == ExperimentKind::snr_sweep;
}

GgmModel build_model(const ExperimentConfig& cfg, int d, std::uint64_t model_seed) {
  if (cfg.model.type == ModelRecipe::Type::star) {
    return generate_star_model(d, cfg.model.rho);
  }
  return generate_random_model(d, cfg.model.edge_prob, cfg.model.max_degree,
                               cfg.model.weight_low, cfg.model.weight_high,
                               model_seed);
}

ChannelSpec build_channel(const ExperimentConfig& cfg, const Point& p,
                          std::uint64_t chan_seed) {
  switch (cfg.channel.gains) {
    case ChannelRecipe::Gains::identity:
      return identity_channel(p.d, p.power, p.noise_var);
    case ChannelRecipe::Gains::rayleigh:
      return rayleigh_channel(p.d, p.power, p.noise_var, chan_seed,
                              cfg.channel.complex_fading);
    case ChannelRecipe::Gains::explicit_entries: {
      ChannelSpec chan;
      const auto& rows = cfg.channel.entries;
      chan.gains.resize(rows.size(), rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
          chan.gains(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
      }
      chan.power = p.power;
      chan.noise_var = p.noise_var;
      validate_channel(chan);
      return chan;
    }
  }
  throw std::logic_error("unreachable channel recipe");
}

// FNV-1a over the raw config text; ties the CSV to the exact input document.
std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_bool(bool b) { return b ? "1" : "0"; }

void write_row(std::ostream& out, const TrialRow& r) {
  out << r.method << ',' << r.d << ',' << r.n << ',' << format_double(r.snr) << ','
      << r.seed << ',' << format_double(r.tpr) << ',' << format_double(r.fpr) << ','
      << format_bool(r.exact) << ',' << format_bool(r.sign_consistent) << ','
      << format_double(r.lambda) << ',' << r.sweeps << ',' << format_bool(r.converged)
      << ',' << r.clamps << '\n';
}

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single_run: return "single_run";
    case ExperimentKind::dim_sweep: return "dim_sweep";
    case ExperimentKind::sample_sweep: return "sample_sweep";
    case ExperimentKind::star_recovery: return "star_recovery";
    case ExperimentKind::snr_sweep: return "snr_sweep";
  }
  return "?";
}

const char* csv_header() {
  return "method,d,n,snr,seed,tpr,fpr,exact,sign_consistent,lambda,sweeps,converged,clamps";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j = json::parse(json_text);
  check_keys(j, "config",
             {"experiment", "model", "channel", "methods", "grid", "d", "n", "trials",
              "graph_repeats", "lambda", "solver", "master_seed", "output", "threads"});

  ExperimentConfig cfg;
  cfg.source_text = json_text;
  cfg.kind = kind_from_string(j.value("experiment", "single_run"));
  cfg.dim = j.value("d", cfg.dim);
  cfg.n = j.value("n", cfg.n);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.graph_repeats = j.value("graph_repeats", cfg.graph_repeats);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.output = j.value("output", cfg.output);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("grid")) cfg.grid = j.at("grid").get<std::vector<double>>();

  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) {
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model",
               {"type", "edge_prob", "max_degree", "weight_low", "weight_high", "rho"});
    const std::string type = m.value("type", "random");
    if (type == "random") {
      cfg.model.type = ModelRecipe::Type::random;
    } else if (type == "star") {
      cfg.model.type = ModelRecipe::Type::star;
    } else {
      throw std::runtime_error("config: unknown model type '" + type + "'");
    }
    cfg.model.edge_prob = m.value("edge_prob", cfg.model.edge_prob);
    cfg.model.max_degree = m.value("max_degree", cfg.model.max_degree);
    cfg.model.weight_low = m.value("weight_low", cfg.model.weight_low);
    cfg.model.weight_high = m.value("weight_high", cfg.model.weight_high);
    cfg.model.rho = m.value("rho", cfg.model.rho);
  }

  if (j.contains("channel")) {
    const json& c = j.at("channel");
    check_keys(c, "channel",
               {"h", "rayleigh_seed", "fading", "snr", "power", "noise_var"});
    if (c.contains("h")) {
      if (c.at("h").is_string()) {
        const std::string h = c.at("h").get<std::string>();
        if (h == "identity") {
          cfg.channel.gains = ChannelRecipe::Gains::identity;
        } else if (h == "rayleigh") {
          cfg.channel.gains = ChannelRecipe::Gains::rayleigh;
        } else {
          throw std::runtime_error("config: channel h must be identity, rayleigh, or a matrix");
        }
      } else {
        cfg.channel.gains = ChannelRecipe::Gains::explicit_entries;
        cfg.channel.entries.clear();
        for (const auto& row : c.at("h")) {
          std::vector<std::complex<double>> r;
          for (const auto& entry : row) {
            if (!entry.is_array() || entry.size() != 2) {
              throw std::runtime_error("config: explicit gains entries must be [re, im] pairs");
            }
            r.emplace_back(entry.at(0).get<double>(), entry.at(1).get<double>());
          }
          cfg.channel.entries.push_back(std::move(r));
        }
      }
    }
    cfg.channel.rayleigh_seed = c.value("rayleigh_seed", cfg.channel.rayleigh_seed);
    const std::string fading = c.value("fading", "real");
    if (fading == "real") {
      cfg.channel.complex_fading = false;
    } else if (fading == "complex") {
      cfg.channel.complex_fading = true;
    } else {
      throw std::runtime_error("config: fading must be 'real' or 'complex'");
    }
    if (c.contains("snr")) {
      if (c.contains("power") || c.contains("noise_var")) {
        throw std::runtime_error("config: give either snr or power/noise_var, not both");
      }
      cfg.channel.power = c.at("snr").get<double>();
      cfg.channel.noise_var = 1.0;
    } else {
      cfg.channel.power = c.value("power", cfg.channel.power);
      cfg.channel.noise_var = c.value("noise_var", cfg.channel.noise_var);
    }
  }

  if (j.contains("lambda")) {
    const json& l = j.at("lambda");
    check_keys(l, "lambda", {"policy", "base", "values", "epsilon", "uncoded_tail_variant"});
    const std::string policy = l.value("policy", "heuristic");
    if (policy == "heuristic") {
      cfg.lambda.kind = LambdaPolicy::Kind::heuristic;
    } else if (policy == "theoretical") {
      cfg.lambda.kind = LambdaPolicy::Kind::theoretical;
    } else if (policy == "grid") {
      cfg.lambda.kind = LambdaPolicy::Kind::grid;
    } else {
      throw std::runtime_error("config: unknown lambda policy '" + policy + "'");
    }
    cfg.lambda.base = l.value("base", cfg.lambda.base);
    if (l.contains("values")) cfg.lambda.values = l.at("values").get<std::vector<double>>();
    cfg.lambda.epsilon = l.value("epsilon", cfg.lambda.epsilon);
    cfg.lambda.uncoded_tail_variant =
        l.value("uncoded_tail_variant", cfg.lambda.uncoded_tail_variant);
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, "solver",
               {"max_sweeps", "duality_tol", "inner_tol", "edge_threshold"});
    cfg.solver.max_sweeps = s.value("max_sweeps", cfg.solver.max_sweeps);
    cfg.solver.duality_tol = s.value("duality_tol", cfg.solver.duality_tol);
    cfg.solver.inner_tol = s.value("inner_tol", cfg.solver.inner_tol);
    cfg.solver.edge_threshold = s.value("edge_threshold", cfg.solver.edge_threshold);
  }

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ValidationReport validate_config(const ExperimentConfig& cfg) {
  ValidationReport report;
  auto violation = [&](const std::string& s) { report.violations.push_back(s); };
  auto warning = [&](const std::string& s) { report.warnings.push_back(s); };

  if (cfg.methods.empty()) violation("methods list is empty");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    for (std::size_t k = i + 1; k < cfg.methods.size(); ++k) {
      if (cfg.methods[i] == cfg.methods[k]) {
        violation(std::string("duplicate method '") + to_string(cfg.methods[i]) + "'");
      }
    }
  }

  if (cfg.trials < 1) violation("trials must be at least 1");
  if (cfg.graph_repeats < 1) violation("graph_repeats must be at least 1");

  const bool needs_grid = cfg.kind != ExperimentKind::single_run;
  if (needs_grid && cfg.grid.empty()) {
    violation(std::string("experiment '") + to_string(cfg.kind) + "' needs a nonempty grid");
  }
  if (!needs_grid && !cfg.grid.empty()) {
    warning("grid is ignored for single_run");
  }

  switch (cfg.kind) {
    case ExperimentKind::dim_sweep:
      for (double v : cfg.grid) {
        if (v < 2 || v != std::floor(v)) violation("dim_sweep grid values must be integers >= 2");
      }
      if (cfg.n < 1) violation("n must be at least 1");
      break;
    case ExperimentKind::sample_sweep:
    case ExperimentKind::star_recovery:
      for (double v : cfg.grid) {
        if (v < 1 || v != std::floor(v)) violation("sample grid values must be integers >= 1");
      }
      break;
    case ExperimentKind::snr_sweep:
      for (double v : cfg.grid) {
        if (!(v > 0)) violation("snr grid values must be positive");
      }
      if (cfg.n < 1) violation("n must be at least 1");
      break;
    case ExperimentKind::single_run:
      if (cfg.n < 1) violation("n must be at least 1");
      break;
  }

  if (cfg.kind == ExperimentKind::star_recovery &&
      cfg.model.type != ModelRecipe::Type::star) {
    violation("star_recovery requires model type 'star'");
  }
  if (cfg.kind == ExperimentKind::snr_sweep &&
      cfg.channel.gains != ChannelRecipe::Gains::rayleigh) {
    warning("snr_sweep without rayleigh gains redraws nothing across repeats");
  }

  if (cfg.dim < 2) violation("d must be at least 2");
  if (cfg.model.type == ModelRecipe::Type::random) {
    if (!(cfg.model.edge_prob >= 0.0 && cfg.model.edge_prob <= 1.0)) {
      violation("edge_prob must lie in [0, 1]");
    }
    if (cfg.model.max_degree < 1) violation("max_degree must be at least 1");
    if (!(cfg.model.weight_low < cfg.model.weight_high)) {
      violation("weight_low must be below weight_high");
    }
  } else {
    if (!(std::abs(cfg.model.rho) < 1.0)) violation("star rho must satisfy |rho| < 1");
  }
  if (cfg.model.type == ModelRecipe::Type::star && cfg.graph_repeats > 1 &&
      cfg.kind != ExperimentKind::snr_sweep) {
    warning("star models are deterministic; graph_repeats > 1 repeats identical graphs");
  }

  if (!(cfg.channel.power > 0.0)) violation("channel power (or snr) must be positive");
  if (!(cfg.channel.noise_var >= 0.0)) violation("noise_var must be nonnegative");

  std::vector<Point> points = resolve_points(cfg);

  if (cfg.channel.gains == ChannelRecipe::Gains::explicit_entries) {
    const std::size_t rows = cfg.channel.entries.size();
    bool square = true;
    for (const auto& r : cfg.channel.entries) square = square && r.size() == rows;
    if (!square || rows == 0) violation("explicit channel gains must be a nonempty square matrix");
    for (const Point& p : points) {
      if (square && rows != static_cast<std::size_t>(p.d)) {
        violation("explicit channel gains must match every swept dimension");
        break;
      }
    }
  }

  const bool uses_signs =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::signs) != cfg.methods.end();
  const bool uses_uncoded =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::uncoded) != cfg.methods.end();

  if (uses_uncoded) {
    for (const Point& p : points) {
      if (p.n % 2) {
        warning("odd n drops one sample in the uncoded pipeline");
        break;
      }
    }
  }

  if (uses_signs && report.violations.empty()) {
    if (cfg.channel.noise_var == 0.0) {
      warning("noiseless channel: rate region is unconstrained, signs always admitted");
    } else if (cfg.channel.gains == ChannelRecipe::Gains::rayleigh &&
               cfg.kind == ExperimentKind::snr_sweep) {
      warning("signs admission over redrawn fading is checked per repeat at run time");
    } else {
      for (const Point& p : points) {
        ChannelSpec chan;
        try {
          chan = build_channel(cfg, p, cfg.channel.rayleigh_seed);
        } catch (const std::exception& e) {
          violation(std::string("channel construction failed: ") + e.what());
          break;
        }
        RateRegionReport rep = rate_region_feasible(chan, Eigen::VectorXd::Ones(p.d));
        if (!rep.feasible) {
          std::ostringstream msg;
          msg << "rate region violated at d=" << p.d << ", snr=" << p.snr
              << ": 1 bit per machine exceeds a subset capacity by " << -rep.slack
              << " bits (" << rep.tightest_subset.size() << " machines)";
          violation(msg.str());
        } else if (!rep.exhaustive) {
          warning("rate region above d=20 checked on a subset family only");
        }
      }
    }
  }

  if (cfg.lambda.kind == LambdaPolicy::Kind::grid && cfg.lambda.values.empty()) {
    violation("grid lambda policy needs nonempty values");
  }
  if (cfg.lambda.kind == LambdaPolicy::Kind::heuristic && !(cfg.lambda.base > 0.0)) {
    violation("heuristic lambda needs a positive base");
  }
  if (cfg.lambda.kind == LambdaPolicy::Kind::theoretical) {
    for (const Point& p : points) {
      if (p.d > 150) {
        violation("theoretical lambda needs Fisher constants, unavailable above d=150");
        break;
      }
    }
    if (cfg.lambda.epsilon != 0.0) {
      if (!(cfg.lambda.epsilon > 0.0 && cfg.lambda.epsilon < 1.0)) {
        violation("epsilon must lie in (0, 1)");
      } else {
        for (const Point& p : points) {
          if (cfg.lambda.epsilon > 1.0 / (static_cast<double>(p.d) * p.d)) {
            warning("epsilon above 1/d^2: outside the recovery guarantee regime");
            break;
          }
        }
      }
    }
  }

  if (!(cfg.solver.duality_tol > 0.0) || !(cfg.solver.inner_tol > 0.0) ||
      cfg.solver.max_sweeps < 1 || cfg.solver.edge_threshold < 0.0) {
    violation("solver tolerances must be positive");
  }

  return report;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& csv_out) {
  ValidationReport report = validate_config(cfg);
  for (const auto& w : report.warnings) std::cerr << "config warning: " << w << "\n";
  if (!report.ok()) {
    std::string msg = "config violations:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }

  const std::vector<Point> points = resolve_points(cfg);
  const int repeats = cfg.graph_repeats;
  const int trials = cfg.trials;
  const int n_methods = static_cast<int>(cfg.methods.size());
  const std::size_t total = points.size() * repeats * trials * n_methods;

  ExperimentSummary summary;
  summary.rows.assign(total, TrialRow{});

  // One model per repeat; shared across points for fixed-dimension sweeps
  // (snr_sweep fixes a single graph and redraws the channel instead).
  const bool shared = models_shared_across_points(cfg.kind);

  std::vector<GgmModel> shared_models;
  if (shared) {
    shared_models.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t ms =
          cfg.kind == ExperimentKind::snr_sweep
              ? derive_seed(cfg.master_seed, kGraphTag, 0)
              : derive_seed(cfg.master_seed, kGraphTag, static_cast<std::uint64_t>(r));
      shared_models.push_back(build_model(cfg, cfg.dim, ms));
    }
  }

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Point& point = points[pi];
    const auto t_start = std::chrono::steady_clock::now();

    struct RepeatCtx {
      GgmModel model;
      ChannelSpec chan;
      bool signs_admitted = true;
      double lambda_by_method[3] = {0.0, 0.0, 0.0};
    };
    std::vector<RepeatCtx> ctxs(repeats);

    for (int r = 0; r < repeats; ++r) {
      RepeatCtx& ctx = ctxs[r];
      ctx.model = shared
                      ? shared_models[r]
                      : build_model(cfg, point.d,
                                    derive_seed(cfg.master_seed, kGraphTag, pi,
                                                static_cast<std::uint64_t>(r)));
      const std::uint64_t chan_seed =
          cfg.kind == ExperimentKind::snr_sweep
              ? derive_seed(cfg.master_seed, kChanTag, pi, static_cast<std::uint64_t>(r))
              : cfg.channel.rayleigh_seed;
      ctx.chan = build_channel(cfg, point, chan_seed);

      if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::signs) !=
              cfg.methods.end() &&
          ctx.chan.noise_var > 0.0) {
        ctx.signs_admitted =
            rate_region_feasible(ctx.chan, Eigen::VectorXd::Ones(point.d)).feasible;
        if (!ctx.signs_admitted) {
          std::lock_guard lock(log_mutex);
          std::cerr << "point " << pi << " repeat " << r
                    << ": rate region violated, signs trials marked failed\n";
        }
      }

      // Per-method regularization for this repeat.
      double base = cfg.lambda.base;
      if (cfg.lambda.kind == LambdaPolicy::Kind::grid) {
        // Calibrate on the plain pipeline with a dedicated draw, then scale.
        const std::uint64_t cal_seed =
            derive_seed(cfg.master_seed, kCalibrationTag, pi, static_cast<std::uint64_t>(r));
        CovarianceEstimate cal = pipeline_covariance(
            ctx.model, Method::original, ctx.chan, point.n, cal_seed,
            derive_seed(cal_seed, kNoiseTag), true);
        double best_score = -2.0;
        double best_lambda = cfg.lambda.values.front();
        for (double lv : cfg.lambda.values) {
          SolverConfig sc = cfg.solver;
          sc.lambda = lv;
          SolverResult res = glasso_solve(cal, sc);
          RecoveryReport rr = score(ctx.model, res);
          const double s = rr.tpr - rr.fpr;
          if (s > best_score + 1e-12) {
            best_score = s;
            best_lambda = lv;
          }
        }
        base = best_lambda;
      }

      for (int mi = 0; mi < n_methods; ++mi) {
        const Method m = cfg.methods[mi];
        if (cfg.lambda.kind == LambdaPolicy::Kind::theoretical) {
          double alpha;
          if (ctx.model.alpha) {
            alpha = *ctx.model.alpha;
          } else {
            ModelConstants mc = compute_constants(ctx.model);
            ctx.model.alpha = mc.alpha;
            alpha = mc.alpha;
          }
          const double eps = cfg.lambda.epsilon > 0.0
                                 ? cfg.lambda.epsilon
                                 : 1.0 / (static_cast<double>(point.d) * point.d);
          if (m == Method::uncoded && cfg.lambda.uncoded_tail_variant) {
            ctx.lambda_by_method[mi] = uncoded_theoretical_lambda(
                alpha, point.n, eps, uncoded_tail_constant(build_real_block(ctx.chan)));
          } else {
            ctx.lambda_by_method[mi] = theoretical_lambda(alpha, point.n, eps);
          }
        } else {
          ctx.lambda_by_method[mi] = heuristic_lambda(base, m);
        }
      }
    }

    // Trials are independent; rows land in preassigned slots so the CSV order
    // is fixed regardless of scheduling.
    parallel_for(
        static_cast<std::size_t>(repeats) * trials,
        [&](std::size_t task) {
          const int r = static_cast<int>(task / trials);
          const int t = static_cast<int>(task % trials);
          const RepeatCtx& ctx = ctxs[r];
          const std::uint64_t ss = derive_seed(cfg.master_seed, kSampleTag, pi,
                                               static_cast<std::uint64_t>(r),
                                               static_cast<std::uint64_t>(t));
          const std::uint64_t ns = derive_seed(cfg.master_seed, kNoiseTag, pi,
                                               static_cast<std::uint64_t>(r),
                                               static_cast<std::uint64_t>(t));
          for (int mi = 0; mi < n_methods; ++mi) {
            const Method m = cfg.methods[mi];
            const std::size_t slot =
                ((pi * repeats + r) * trials + t) * n_methods + mi;
            TrialRow& row = summary.rows[slot];
            row.method = to_string(m);
            row.d = point.d;
            row.n = point.n;
            row.snr = point.snr;
            row.seed = ss;
            row.lambda = ctx.lambda_by_method[mi];

            if (m == Method::signs && !ctx.signs_admitted) {
              row.failed = true;
              row.tpr = row.fpr = std::nan("");
              continue;
            }
            try {
              CovarianceEstimate est =
                  pipeline_covariance(ctx.model, m, ctx.chan, point.n, ss, ns, true);
              SolverConfig sc = cfg.solver;
              sc.lambda = ctx.lambda_by_method[mi];
              SolverResult res = glasso_solve(est, sc);
              RecoveryReport rr = score(ctx.model, res);
              row.tpr = rr.tpr;
              row.fpr = rr.fpr;
              row.exact = rr.exact_recovery;
              row.sign_consistent = rr.sign_consistent;
              row.sweeps = res.sweeps_used;
              row.converged = res.converged;
              row.clamps = est.clamped_diagonals;
            } catch (const std::exception& e) {
              row.failed = true;
              row.tpr = row.fpr = std::nan("");
              std::lock_guard lock(log_mutex);
              std::cerr << "trial failed (" << row.method << ", d=" << row.d
                        << ", n=" << row.n << "): " << e.what() << "\n";
            }
          }
        },
        cfg.threads);

    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t_start);
    std::cerr << "point " << (pi + 1) << "/" << points.size() << " (d=" << point.d
              << ", n=" << point.n << ", snr=" << format_double(point.snr) << "): "
              << elapsed.count() << " s\n";
  }

  // Aggregates per (method, point) over all repeats and trials.
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (int mi = 0; mi < n_methods; ++mi) {
      SummaryRow agg;
      agg.method = to_string(cfg.methods[mi]);
      agg.d = points[pi].d;
      agg.n = points[pi].n;
      agg.snr = points[pi].snr;
      int used = 0;
      for (int r = 0; r < repeats; ++r) {
        for (int t = 0; t < trials; ++t) {
          const std::size_t slot = ((pi * repeats + r) * trials + t) * n_methods + mi;
          const TrialRow& row = summary.rows[slot];
          ++agg.trials;
          if (row.failed) {
            ++agg.failed;
            continue;
          }
          ++used;
          agg.mean_tpr += row.tpr;
          agg.mean_fpr += row.fpr;
          agg.exact_rate += row.exact ? 1.0 : 0.0;
          agg.sign_consistent_rate += row.sign_consistent ? 1.0 : 0.0;
          agg.mean_sweeps += row.sweeps;
          agg.converged_rate += row.converged ? 1.0 : 0.0;
        }
      }
      if (used > 0) {
        agg.mean_tpr /= used;
        agg.mean_fpr /= used;
        agg.exact_rate /= used;
        agg.sign_consistent_rate /= used;
        agg.mean_sweeps /= used;
        agg.converged_rate /= used;
      }
      summary.aggregates.push_back(std::move(agg));
    }
  }

  csv_out << "# ggmac results v1\n";
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg.source_text)));
  csv_out << "# config " << hash_hex << " experiment " << to_string(cfg.kind)
          << " master_seed " << cfg.master_seed << "\n";
  csv_out << csv_header() << "\n";
  for (const TrialRow& row : summary.rows) write_row(csv_out, row);
  csv_out.flush();

  return summary;
}

std::string summary_table(const ExperimentSummary& summary) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-9s %5s %9s %8s %7s %7s %7s %7s %9s %6s\n",
                "method", "d", "n", "snr", "tpr", "fpr", "exact", "signcon",
                "converged", "failed");
  out << line;
  for (const SummaryRow& a : summary.aggregates) {
    std::snprintf(line, sizeof(line),
                  "%-9s %5d %9ld %8.3g %7.4f %7.4f %7.4f %7.4f %9.4f %6d\n",
                  a.method.c_str(), a.d, a.n, a.snr, a.mean_tpr, a.mean_fpr,
                  a.exact_rate, a.sign_consistent_rate, a.converged_rate, a.failed);
    out << line;
  }
  return out.str();
}

}  // namespace ggmac
