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
// End-to-end trials: users encode under the chosen mechanism, the server
// observes a responding set (plus colluder transcripts), decodes with the
// optimal linear weights, and the harness aggregates squared errors against
// the ground-truth mean.

#ifndef CORDP_SIMULATOR_HPP_
#define CORDP_SIMULATOR_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "cordp/correlated_noise.hpp"
#include "cordp/optimizer.hpp"
#include "cordp/prng.hpp"
#include "cordp/types.hpp"

namespace cordp {

enum class Mechanism { kCorDp, kLdp, kCdp, kSecAggIdeal };

enum class InputMode {
  kWorstCaseEqualSphere,  // all users share one fixed unit-sphere vector
  kRandomBall,            // independent uniform draws from the unit ball
  kFixed,                 // all users share `fixed_input`
};

enum class RespondingMode { kExactT, kRandomGeqT, kAll };

struct TrialSpec {
  SystemConfig cfg;
  PrivacyBudget budget;
  Mechanism mechanism = Mechanism::kCorDp;
  EstimatorKind estimator = EstimatorKind::kUnbiased;
  InputMode input_mode = InputMode::kWorstCaseEqualSphere;
  RespondingMode responding_mode = RespondingMode::kExactT;
  std::vector<int> colluding_set;  // size <= cfg.c
  Seed256 master_seed{};
  // Finite stand-in for the infinite-variance optimum: sigma2 =
  // multiplier * sigma2_eps_delta.  The discrepancy against the analytic
  // limit is O(1/multiplier).
  double sigma_cap_multiplier = 1e6;
  bool allow_colluder_dropout = false;
  std::vector<double> fixed_input;   // used by InputMode::kFixed
  double sigma2_override = -1.0;     // >= 0 replaces sigma2 (0 = noiseless)

  TrialSpec(SystemConfig config, PrivacyBudget b) : cfg(config), budget(b) {}
};

struct TrialResult {
  double squared_error = 0.0;
  int u_size = 0;
  std::vector<int> responding;  // sorted
  std::vector<double> estimate;
  std::vector<double> true_mean;
};

// Everything a colluding user hands to the server.
struct ColluderTranscript {
  int user = 0;
  std::vector<double> input;
  std::vector<double> noise;
  std::map<int, PairSeed> pair_seeds;
};

// Exactly the information the threat model grants the server for one
// trial: the responding users' uploads plus the colluders' transcripts.
struct ServerView {
  std::vector<int> responding;  // sorted
  std::vector<EncodedVector> payloads;  // one per responding user, in order
  std::vector<ColluderTranscript> colluder_transcripts;
  std::vector<double> true_mean;  // ground truth, for the harness only
};

// Runs the per-user side of one trial (only meaningful for the per-user
// mechanisms, i.e. not the server-side baselines).
ServerView observe_trial(const TrialSpec& spec, std::uint64_t trial_index);

// Deterministic in (master_seed, trial_index); trials are independent
// streams, so parallel and serial execution see identical draws.
TrialResult run_trial(const TrialSpec& spec, std::uint64_t trial_index);

struct USizeSummary {
  int trials = 0;
  double mean_mse = 0.0;
};

struct ExperimentSummary {
  int trials = 0;
  double mean_mse = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;    // 95%, normal approximation
  double ci_high = 0.0;
  std::vector<double> mean_bias;  // per-coordinate mean of estimate - truth
  std::map<int, USizeSummary> per_u_size;
};

// Aggregates run_trial over trial indices [0, trials).  Results are reduced
// in trial order regardless of which worker produced them.
ExperimentSummary run_experiment(const TrialSpec& spec, int trials,
                                 int threads = 0);

struct ConditionalStats {
  double residual_variance = 0.0;  // empirical
  double closed_form = 0.0;        // conditional-variance formula
  double std_error = 0.0;          // of the empirical estimate
  std::int64_t samples = 0;
};

// Regresses the target user's payload on all other honest payloads (with
// colluder-known noise components subtracted) and returns the residual
// variance, the quantity the privacy constraint bounds from below.
ConditionalStats adversary_conditional_stats(const TrialSpec& spec,
                                             int target_user, int trials);

// The finite noise parameters a trial actually samples from (resolves
// limit_mode and sigma2_override).  Exposed for tests.
NoiseParams simulation_params(const TrialSpec& spec);

// Raw per-trial records: trial,u_size,squared_error (LF endings, '.'
// decimal, %.10g like the experiment CSV).
void dump_trials_csv(std::ostream& os, const TrialSpec& spec, int trials);

}  // namespace cordp

#endif  // CORDP_SIMULATOR_HPP_
