// Copyright 2026 The CorDP-DME Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cordp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cordp/calibration.hpp"
#include "cordp/optimizer.hpp"

namespace cordp {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string::size_type at = 0;
  while (true) {
    const auto next = s.find(sep, at);
    parts.push_back(trim(s.substr(at, next - at)));
    if (next == std::string::npos) break;
    at = next + 1;
  }
  return parts;
}

[[noreturn]] void config_fail(int line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& v, int line) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    config_fail(line, "expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& v, int line) {
  try {
    size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    config_fail(line, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_fail(line, "expected a boolean, got '" + v + "'");
}

EstimatorKind parse_estimator(const std::string& v, int line) {
  if (v == "biased") return EstimatorKind::kBiasedOptimal;
  if (v == "unbiased") return EstimatorKind::kUnbiased;
  config_fail(line, "estimator must be 'biased' or 'unbiased'");
}

// "1..100" or "1,2,5" -> list of ints.
std::vector<int> parse_int_list(const std::string& v, int line) {
  const auto range = v.find("..");
  if (range != std::string::npos) {
    const int lo = parse_int(trim(v.substr(0, range)), line);
    const int hi = parse_int(trim(v.substr(range + 2)), line);
    if (hi < lo) config_fail(line, "empty range '" + v + "'");
    std::vector<int> values;
    for (int x = lo; x <= hi; ++x) values.push_back(x);
    return values;
  }
  std::vector<int> values;
  for (const auto& part : split(v, ',')) values.push_back(parse_int(part, line));
  return values;
}

void set_sweep(ExperimentSpec& spec, SweepKind kind, int line) {
  if (spec.sweep != SweepKind::kNone && spec.sweep != kind) {
    config_fail(line, "only one key may be swept");
  }
  spec.sweep = kind;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // normalize negative zero
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

struct ResolvedPoint {
  SystemConfig cfg;
  PrivacyBudget budget;
  Mechanism mechanism;
  int u_size;
};

ResolvedPoint resolve_point(const ExperimentSpec& spec, size_t index) {
  int n = spec.n, t = spec.t, c = spec.c;
  double eps = spec.eps;
  Mechanism mech = spec.mechanism;
  int u = -1;
  switch (spec.sweep) {
    case SweepKind::kNone:
      break;
    case SweepKind::kEpsilon:
      eps = spec.eps_values[index];
      break;
    case SweepKind::kResponding:
      u = spec.responding_values[index];
      t = u;
      break;
    case SweepKind::kCollusion:
      c = spec.collusion_values[index];
      break;
    case SweepKind::kMechanism:
      mech = spec.mechanism_values[index];
      break;
  }
  SystemConfig cfg(n, t, c, spec.d);
  if (u < 0) {
    // The correlated scheme is designed for (and reported at) its worst
    // case u = t; the baselines' reference scenario is full participation.
    u = mech == Mechanism::kCorDp ? cfg.t : cfg.n;
  }
  return ResolvedPoint{cfg, PrivacyBudget(eps, spec.delta), mech, u};
}

size_t sweep_size(const ExperimentSpec& spec) {
  switch (spec.sweep) {
    case SweepKind::kNone:
      return 1;
    case SweepKind::kEpsilon:
      return spec.eps_values.size();
    case SweepKind::kResponding:
      return spec.responding_values.size();
    case SweepKind::kCollusion:
      return spec.collusion_values.size();
    case SweepKind::kMechanism:
      return spec.mechanism_values.size();
  }
  return 1;
}

TrialSpec build_trial_spec(const ExperimentSpec& spec,
                           const ResolvedPoint& point) {
  // Simulate exactly the responding-set size the analytic cell reports.
  TrialSpec trial_spec(
      SystemConfig(point.cfg.n, point.u_size, point.cfg.c, point.cfg.d),
      point.budget);
  trial_spec.mechanism = point.mechanism;
  trial_spec.estimator = spec.estimator;
  trial_spec.input_mode = InputMode::kWorstCaseEqualSphere;
  trial_spec.responding_mode = RespondingMode::kExactT;
  trial_spec.sigma_cap_multiplier = spec.sigma_cap_multiplier;
  for (int i = 0; i < point.cfg.c; ++i) trial_spec.colluding_set.push_back(i);
  trial_spec.master_seed = seed_from_u64(spec.seed);
  return trial_spec;
}

CsvRow evaluate_point(const ExperimentSpec& spec, const ResolvedPoint& point,
                      int trial_threads) {
  CsvRow row;
  row.mechanism = mechanism_name(point.mechanism);
  row.n = point.cfg.n;
  row.t = point.cfg.t;
  row.c = point.cfg.c;
  row.d = point.cfg.d;
  row.epsilon = point.budget.epsilon;
  row.delta = point.budget.delta;
  row.u_size = point.u_size;
  row.estimator =
      spec.estimator == EstimatorKind::kUnbiased ? "unbiased" : "biased";
  row.trials = spec.trials;
  row.seed = spec.seed;

  const double s2ed = sigma_eps_delta(point.budget).sigma2_eps_delta;
  switch (point.mechanism) {
    case Mechanism::kCorDp: {
      const NoiseParams params = optimal_params(point.cfg, s2ed);
      row.sigma2_star = params.sigma2;
      row.rho_star = params.rho;
      row.analytic_mse =
          analytic_mse(point.u_size, point.cfg.d, params, spec.estimator);
      break;
    }
    case Mechanism::kLdp: {
      const NoiseParams params = NoiseParams::finite(s2ed, 0.0);
      row.sigma2_star = s2ed;
      row.rho_star = 0.0;
      row.analytic_mse =
          analytic_mse(point.u_size, point.cfg.d, params, spec.estimator);
      break;
    }
    case Mechanism::kCdp:
    case Mechanism::kSecAggIdeal: {
      // Server-side perturbation of the exact mean; unbiased by
      // construction, so the estimator choice does not change the value.
      const double u = point.u_size;
      row.sigma2_star = s2ed / (u * u);
      row.rho_star = 0.0;
      row.analytic_mse = point.cfg.d * s2ed / (u * u);
      break;
    }
  }

  if (spec.trials > 0) {
    const ExperimentSummary summary = run_experiment(
        build_trial_spec(spec, point), spec.trials, trial_threads);
    row.has_empirical = true;
    row.empirical_mse = summary.mean_mse;
    row.ci_low = summary.ci_low;
    row.ci_high = summary.ci_high;
  }
  return row;
}

}  // namespace

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kCorDp:
      return "cordp";
    case Mechanism::kLdp:
      return "ldp";
    case Mechanism::kCdp:
      return "cdp";
    case Mechanism::kSecAggIdeal:
      return "secagg";
  }
  return "unknown";
}

Mechanism mechanism_from_name(const std::string& name) {
  if (name == "cordp") return Mechanism::kCorDp;
  if (name == "ldp") return Mechanism::kLdp;
  if (name == "cdp") return Mechanism::kCdp;
  if (name == "secagg") return Mechanism::kSecAggIdeal;
  throw ConfigError("unknown mechanism '" + name +
                    "' (expected cordp|ldp|cdp|secagg)");
}

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  bool saw_t = false;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos
                                         ? raw
                                         : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      config_fail(line, "expected 'key = value'");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (value.empty()) config_fail(line, "missing value for '" + key + "'");

    if (key == "name") {
      spec.name = value;
    } else if (key == "mechanism") {
      const auto parts = split(value, ',');
      if (parts.size() > 1) {
        set_sweep(spec, SweepKind::kMechanism, line);
        for (const auto& p : parts) {
          spec.mechanism_values.push_back(mechanism_from_name(p));
        }
      } else {
        spec.mechanism = mechanism_from_name(value);
      }
    } else if (key == "n") {
      spec.n = parse_int(value, line);
    } else if (key == "t") {
      spec.t = parse_int(value, line);
      saw_t = true;
    } else if (key == "c") {
      const auto values = parse_int_list(value, line);
      if (values.size() > 1) {
        set_sweep(spec, SweepKind::kCollusion, line);
        spec.collusion_values = values;
      } else {
        spec.c = values[0];
      }
    } else if (key == "d") {
      spec.d = parse_int(value, line);
    } else if (key == "eps") {
      const auto parts = split(value, ',');
      if (parts.size() > 1) {
        set_sweep(spec, SweepKind::kEpsilon, line);
        for (const auto& p : parts) {
          spec.eps_values.push_back(parse_double(p, line));
        }
      } else {
        spec.eps = parse_double(value, line);
      }
    } else if (key == "delta") {
      spec.delta = parse_double(value, line);
    } else if (key == "trials") {
      spec.trials = parse_int(value, line);
      if (spec.trials < 0) config_fail(line, "trials must be >= 0");
    } else if (key == "estimator") {
      spec.estimator = parse_estimator(value, line);
    } else if (key == "seed") {
      try {
        size_t used = 0;
        spec.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        config_fail(line, "expected an unsigned integer, got '" + value + "'");
      }
    } else if (key == "out") {
      spec.out_path = value;
    } else if (key == "responding") {
      set_sweep(spec, SweepKind::kResponding, line);
      spec.responding_values = parse_int_list(value, line);
    } else if (key == "sigma_cap_multiplier") {
      spec.sigma_cap_multiplier = parse_double(value, line);
    } else if (key == "analytic_only") {
      if (parse_bool(value, line)) spec.trials = 0;
    } else if (key == "threads") {
      spec.threads = parse_int(value, line);
    } else {
      config_fail(line, "unknown key '" + key + "'");
    }
  }
  if (!saw_t) spec.t = spec.n;

  // Validate every sweep point eagerly so errors carry the offending key.
  for (size_t i = 0; i < sweep_size(spec); ++i) {
    try {
      resolve_point(spec, i);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("invalid configuration (c < t <= n): ") +
                        e.what());
    }
  }
  return spec;
}

std::vector<CsvRow> run_experiment_spec(const ExperimentSpec& spec) {
  const size_t points = sweep_size(spec);
  std::vector<CsvRow> rows(points);
  int workers = spec.threads > 0
                    ? spec.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(points)));
  // A single sweep point instead parallelizes its Monte-Carlo trials.
  const int trial_threads = points == 1 ? spec.threads : 1;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t i = w; i < points; i += static_cast<size_t>(workers)) {
          rows[i] = evaluate_point(spec, resolve_point(spec, i), trial_threads);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << "mechanism,n,t,c,d,epsilon,delta,u_size,estimator,sigma2_star,"
        "rho_star,analytic_mse,empirical_mse,ci_low,ci_high,trials,seed\n";
  for (const auto& r : rows) {
    os << r.mechanism << ',' << r.n << ',' << r.t << ',' << r.c << ',' << r.d
       << ',' << format_double(r.epsilon) << ',' << format_double(r.delta)
       << ',' << r.u_size << ',' << r.estimator << ','
       << format_double(r.sigma2_star) << ',' << format_double(r.rho_star)
       << ',' << format_double(r.analytic_mse) << ',';
    if (r.has_empirical) {
      os << format_double(r.empirical_mse) << ',' << format_double(r.ci_low)
         << ',' << format_double(r.ci_high);
    } else {
      os << ",,";
    }
    os << ',' << r.trials << ',' << r.seed << '\n';
  }
}

std::string table3_report() {
  struct Scenario {
    const char* heading;
    int t, c;
    bool ldp;
    double ref_sigma2;  // NaN marks the unbounded limit
    double ref_rho, ref_biased, ref_unbiased;
  };
  const double kInf = std::numeric_limits<double>::infinity();
  const Scenario scenarios[] = {
      {"no dropouts, no collusion (t=10,c=0)", 10, 0, false, kInf, -0.111,
       0.166, 0.199},
      {"only collusion (t=10,c=2)", 10, 2, false, kInf, -0.111, 0.199, 0.248},
      {"only dropouts (t=8,c=0)", 8, 0, false, 5.466, -0.091, 0.554, 1.242},
      {"dropouts and collusion (t=8,c=2)", 8, 2, false, 6.318, -0.089, 0.598,
       1.488},
      {"ldp baseline (t=10,c=0)", 10, 0, true, 3.975, 0.0, 0.665, 1.988},
  };
  const PrivacyBudget budget(2.0, 1e-5);
  const double s2ed = sigma_eps_delta(budget).sigma2_eps_delta;
  const int d = 5;

  std::ostringstream os;
  os << "optimal parameters, n=10 d=5 eps=2 delta=1e-5\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-42s %10s %8s %10s %12s %8s\n",
                "scenario", "sigma2*", "rho*", "mse", "estimator", "ref");
  os << line;
  double worst_dev = 0.0;
  for (const auto& s : scenarios) {
    const SystemConfig cfg(10, s.t, s.c, d);
    NoiseParams params = s.ldp ? NoiseParams::finite(s2ed, 0.0)
                               : optimal_params(cfg, s2ed);
    const double biased =
        analytic_mse(s.t, d, params, EstimatorKind::kBiasedOptimal);
    const double unbiased =
        analytic_mse(s.t, d, params, EstimatorKind::kUnbiased);
    const std::string sigma_text =
        params.limit_mode ? "->inf" : format_double(params.sigma2);
    for (const bool is_biased : {true, false}) {
      const double value = is_biased ? biased : unbiased;
      const double ref = is_biased ? s.ref_biased : s.ref_unbiased;
      const double dev = std::abs(value - ref) / ref;
      worst_dev = std::max(worst_dev, dev);
      std::snprintf(line, sizeof(line),
                    "%-42s %10s %8.4f %10.4f %12s %8.3f (dev %.3g%%)\n",
                    s.heading, sigma_text.c_str(), params.rho, value,
                    is_biased ? "biased" : "unbiased", ref, 100.0 * dev);
      os << line;
    }
  }
  std::snprintf(line, sizeof(line),
                "max relative deviation from reference: %.4g%%\n",
                100.0 * worst_dev);
  os << line;
  return os.str();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"correlated-noise DP distributed mean estimation"};
  std::string config_path;
  std::string mode = "cordp";
  std::string estimator = "unbiased";
  std::string sweep_expr;
  std::string out_path;
  ExperimentSpec spec;
  bool analytic_only = false;
  bool table3 = false;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--mode", mode, "cordp|ldp|cdp|secagg");
  app.add_option("--n", spec.n, "total users");
  auto* t_opt = app.add_option("--t", spec.t, "minimum responding users");
  app.add_option("--c", spec.c, "maximum colluding users");
  app.add_option("--d", spec.d, "vector dimension");
  app.add_option("--eps", spec.eps, "privacy epsilon");
  app.add_option("--delta", spec.delta, "privacy delta");
  app.add_option("--trials", spec.trials, "Monte-Carlo trials per row");
  app.add_option("--estimator", estimator, "biased|unbiased");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (64-bit)");
  app.add_option("--out", out_path, "output CSV path (default stdout)");
  app.add_flag("--analytic-only", analytic_only, "skip Monte-Carlo trials");
  app.add_option("--sweep", sweep_expr,
                 "swept axis, e.g. responding=1..100 | eps=0.5,1,2 | "
                 "c=0,1,2 | mechanism=cordp,ldp,cdp");
  app.add_option("--sigma-cap-multiplier", spec.sigma_cap_multiplier,
                 "finite stand-in factor for the no-dropout limit");
  app.add_option("--threads", spec.threads, "worker threads (0 = auto)");
  app.add_flag("--table3", table3, "print the optimal-parameter comparison");
  std::string dump_trials_path;
  app.add_option("--dump-trials", dump_trials_path,
                 "write raw per-trial records to this path (single sweep "
                 "point, trials > 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (table3) {
      std::cout << table3_report();
      return 0;
    }
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      std::stringstream buffer;
      buffer << in.rdbuf();
      spec = parse_config(buffer.str());
    } else {
      // Synthesize a config document so flags share the grammar, the
      // validation, and the sweep handling with config files.
      const int direct_threads = spec.threads;
      std::ostringstream doc;
      doc << "mechanism = " << mode << "\n"
          << "n = " << spec.n << "\n";
      if (t_opt->count()) doc << "t = " << spec.t << "\n";
      doc << "c = " << spec.c << "\n"
          << "d = " << spec.d << "\n"
          << "eps = " << format_double(spec.eps) << "\n"
          << "delta = " << format_double(spec.delta) << "\n"
          << "trials = " << spec.trials << "\n"
          << "estimator = " << estimator << "\n"
          << "sigma_cap_multiplier = "
          << format_double(spec.sigma_cap_multiplier) << "\n";
      if (!sweep_expr.empty()) {
        const auto eq = sweep_expr.find('=');
        if (eq == std::string::npos) {
          throw ConfigError("--sweep expects key=values");
        }
        doc << sweep_expr.substr(0, eq) << " = " << sweep_expr.substr(eq + 1)
            << "\n";
      }
      spec = parse_config(doc.str());
      spec.threads = direct_threads;
      if (!sweep_expr.empty() && spec.sweep == SweepKind::kNone) {
        throw ConfigError("--sweep axis must have at least two values");
      }
    }
    if (analytic_only) spec.trials = 0;
    if (seed_opt->count()) {
      spec.seed = seed;
    } else if (const char* env = std::getenv("CORDP_SEED")) {
      spec.seed = std::strtoull(env, nullptr, 10);
    }
    if (!out_path.empty()) spec.out_path = out_path;

    // Validate all sweep points (throws ConfigError on violations).
    for (size_t i = 0; i < sweep_size(spec); ++i) resolve_point(spec, i);

    std::cerr << "resolved: mechanism=" << mechanism_name(spec.mechanism)
              << " n=" << spec.n << " t=" << spec.t << " c=" << spec.c
              << " d=" << spec.d << " eps=" << spec.eps
              << " delta=" << spec.delta << " trials=" << spec.trials
              << " estimator="
              << (spec.estimator == EstimatorKind::kUnbiased ? "unbiased"
                                                             : "biased")
              << " seed=" << spec.seed << " sweep_points=" << sweep_size(spec)
              << "\n";

    if (!dump_trials_path.empty()) {
      if (sweep_size(spec) != 1 || spec.trials <= 0) {
        throw ConfigError(
            "--dump-trials needs a single sweep point and trials > 0");
      }
      std::ostringstream raw;
      dump_trials_csv(raw, build_trial_spec(spec, resolve_point(spec, 0)),
                      spec.trials);
      std::ofstream dump(dump_trials_path, std::ios::binary | std::ios::trunc);
      if (!dump) throw std::runtime_error("cannot write " + dump_trials_path);
      dump << raw.str();
    }

    const std::vector<CsvRow> rows = run_experiment_spec(spec);
    // Built fully in memory first so a failure never leaves a partial file.
    std::ostringstream buffer;
    write_csv(buffer, rows);
    if (spec.out_path.empty()) {
      std::cout << buffer.str();
    } else {
      std::ofstream out(spec.out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + spec.out_path);
      out << buffer.str();
      if (!out.good()) {
        out.close();
        std::filesystem::remove(spec.out_path);
        throw std::runtime_error("failed while writing " + spec.out_path);
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cordp
