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
//
// Declarative experiment sweeps and the CSV emitter behind the CLI.

#ifndef CORDP_EXPERIMENT_HPP_
#define CORDP_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cordp/simulator.hpp"
#include "cordp/types.hpp"

namespace cordp {

enum class SweepKind { kNone, kEpsilon, kResponding, kCollusion, kMechanism };

// One experiment = one base configuration plus at most one swept axis.
// A responding-size sweep value u stands for the scheme optimized with
// threshold t = u, evaluated at its worst case |U| = u.
struct ExperimentSpec {
  std::string name = "experiment";
  Mechanism mechanism = Mechanism::kCorDp;
  int n = 10;
  int t = 10;
  int c = 0;
  int d = 5;
  double eps = 2.0;
  double delta = 1e-5;
  int trials = 0;  // 0 = analytic-only rows
  EstimatorKind estimator = EstimatorKind::kUnbiased;
  std::uint64_t seed = 0;
  std::string out_path;  // empty = stdout
  double sigma_cap_multiplier = 1e6;
  int threads = 0;

  SweepKind sweep = SweepKind::kNone;
  std::vector<double> eps_values;
  std::vector<int> responding_values;
  std::vector<int> collusion_values;
  std::vector<Mechanism> mechanism_values;
};

// Fixed column order; the golden-file test pins it.
struct CsvRow {
  std::string mechanism;
  int n = 0, t = 0, c = 0, d = 0;
  double epsilon = 0.0, delta = 0.0;
  int u_size = 0;
  std::string estimator;
  double sigma2_star = 0.0;  // +inf encodes the no-dropout limit
  double rho_star = 0.0;
  double analytic_mse = 0.0;
  bool has_empirical = false;
  double empirical_mse = 0.0, ci_low = 0.0, ci_high = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

// Flat `key = value` document: one pair per line, `#` comments, commas (or
// `lo..hi` for responding) turn a value into a sweep.  Unknown keys and
// constraint violations are errors carrying the line number or key name.
ExperimentSpec parse_config(const std::string& text);

// One row per sweep value (the base configuration counts as a single-value
// sweep).  Sweep points run on a worker pool; rows come back in sweep order.
std::vector<CsvRow> run_experiment_spec(const ExperimentSpec& spec);

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);

// Comparison of the closed-form pipeline against the published optimal
// parameters for the n=10, d=5, eps=2, delta=1e-5 scenario.
std::string table3_report();

// Full command-line entry point.  Exit status: 0 success, 1 configuration
// error, 2 runtime error.  No partial CSV survives a failure.
int run_cli(int argc, char** argv);

const char* mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string& name);

}  // namespace cordp

#endif  // CORDP_EXPERIMENT_HPP_
