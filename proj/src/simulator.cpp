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

#include "cordp/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>

#include "cordp/calibration.hpp"

namespace cordp {
namespace {

Seed256 trial_seed(const Seed256& master, std::uint64_t trial_index) {
  return derive_seed(master, kTagTrial,
                     static_cast<std::uint32_t>(trial_index),
                     static_cast<std::uint32_t>(trial_index >> 32));
}

void validate_spec(const TrialSpec& spec) {
  if (static_cast<int>(spec.colluding_set.size()) > spec.cfg.c) {
    throw ConfigError("colluding set exceeds the collusion threshold");
  }
  std::set<int> seen;
  for (int u : spec.colluding_set) {
    if (u < 0 || u >= spec.cfg.n) throw ConfigError("colluder out of range");
    if (!seen.insert(u).second) throw ConfigError("duplicate colluder");
  }
  if (spec.input_mode == InputMode::kFixed &&
      static_cast<int>(spec.fixed_input.size()) != spec.cfg.d) {
    throw ConfigError("fixed_input must have dimension d");
  }
  if (!(spec.sigma_cap_multiplier > 0.0) ||
      !std::isfinite(spec.sigma_cap_multiplier)) {
    throw ConfigError("sigma_cap_multiplier must be positive and finite");
  }
}

// Inputs for one trial; all users' vectors stay inside the unit ball.
std::vector<std::vector<double>> draw_inputs(const TrialSpec& spec,
                                             SequentialRng& rng) {
  const int n = spec.cfg.n;
  const int d = spec.cfg.d;
  std::vector<std::vector<double>> x(n, std::vector<double>(d, 0.0));
  switch (spec.input_mode) {
    case InputMode::kWorstCaseEqualSphere:
      // Any fixed unit vector is equivalent by rotational symmetry of the
      // noise; the first basis vector is the canonical choice.
      for (int i = 0; i < n; ++i) x[i][0] = 1.0;
      break;
    case InputMode::kFixed:
      for (int i = 0; i < n; ++i) x[i] = spec.fixed_input;
      break;
    case InputMode::kRandomBall:
      for (int i = 0; i < n; ++i) {
        double norm2 = 0.0;
        for (int k = 0; k < d; ++k) {
          x[i][k] = rng.gaussian();
          norm2 += x[i][k] * x[i][k];
        }
        const double norm = std::sqrt(norm2);
        const double radius = std::pow(rng.unit(), 1.0 / d);
        for (int k = 0; k < d; ++k) x[i][k] *= norm > 0 ? radius / norm : 0.0;
      }
      break;
  }
  return x;
}

// Responding set: a uniformly random size-u superset of the colluding set
// (colluders keep their foothold unless allow_colluder_dropout is set).
std::vector<int> draw_responding(const TrialSpec& spec, SequentialRng& rng) {
  const int n = spec.cfg.n;
  int u = spec.cfg.t;
  switch (spec.responding_mode) {
    case RespondingMode::kAll:
      u = n;
      break;
    case RespondingMode::kExactT:
      u = spec.cfg.t;
      break;
    case RespondingMode::kRandomGeqT:
      u = spec.cfg.t +
          static_cast<int>(rng.below(static_cast<std::uint64_t>(n - spec.cfg.t) + 1));
      break;
  }
  std::vector<int> pinned;
  if (!spec.allow_colluder_dropout) pinned = spec.colluding_set;
  if (static_cast<int>(pinned.size()) > u) {
    throw ConfigError("pinned colluders exceed the responding-set size");
  }
  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (std::find(pinned.begin(), pinned.end(), i) == pinned.end()) {
      pool.push_back(i);
    }
  }
  // Partial Fisher-Yates for the remaining slots.
  const int need = u - static_cast<int>(pinned.size());
  for (int k = 0; k < need; ++k) {
    const std::uint64_t j = k + rng.below(pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  std::vector<int> responding = pinned;
  responding.insert(responding.end(), pool.begin(), pool.begin() + need);
  std::sort(responding.begin(), responding.end());
  return responding;
}

}  // namespace

NoiseParams simulation_params(const TrialSpec& spec) {
  const double s2ed = sigma_eps_delta(spec.budget).sigma2_eps_delta;
  if (spec.sigma2_override >= 0.0) {
    return NoiseParams::finite(spec.sigma2_override, 0.0);
  }
  switch (spec.mechanism) {
    case Mechanism::kLdp:
      return NoiseParams::finite(s2ed, 0.0);
    case Mechanism::kCdp:
    case Mechanism::kSecAggIdeal:
      // Server-side perturbation of the exact mean; per-user params unused.
      return NoiseParams::finite(s2ed, 0.0);
    case Mechanism::kCorDp: {
      const NoiseParams optimal = optimal_params(spec.cfg, s2ed);
      if (!optimal.limit_mode) return optimal;
      // Finite stand-in for the infinite-variance optimum, kept exactly on
      // the feasibility boundary at that variance.
      const double sigma2 = spec.sigma_cap_multiplier * s2ed;
      const double r = optimal_r_at(spec.cfg.n, spec.cfg.c, sigma2, s2ed);
      return NoiseParams::finite(sigma2, r / sigma2);
    }
  }
  throw ConfigError("unknown mechanism");
}

ServerView observe_trial(const TrialSpec& spec, std::uint64_t trial_index) {
  validate_spec(spec);
  if (spec.mechanism == Mechanism::kCdp ||
      spec.mechanism == Mechanism::kSecAggIdeal) {
    throw ConfigError("server-side baselines have no per-user uploads");
  }
  const Seed256 seed = trial_seed(spec.master_seed, trial_index);
  SequentialRng input_rng(seed, kStreamInputs);
  SequentialRng responding_rng(seed, kStreamResponding);

  const int d = spec.cfg.d;
  const auto x = draw_inputs(spec, input_rng);
  const NoiseParams params = simulation_params(spec);
  const DealtSeeds dealt = deal_seeds(spec.cfg.n, seed);

  ServerView view;
  view.responding = draw_responding(spec, responding_rng);
  const int u = static_cast<int>(view.responding.size());
  view.true_mean.assign(d, 0.0);
  for (int i : view.responding) {
    for (int k = 0; k < d; ++k) view.true_mean[k] += x[i][k] / u;
  }
  view.payloads.reserve(view.responding.size());
  for (int i : view.responding) {
    const auto z = generate_user_noise(dealt.plan_for(i, params, d));
    view.payloads.push_back(encode(i, x[i], z));
  }
  for (int colluder : spec.colluding_set) {
    ColluderTranscript transcript;
    transcript.user = colluder;
    transcript.input = x[colluder];
    transcript.noise = generate_user_noise(dealt.plan_for(colluder, params, d));
    transcript.pair_seeds = dealt.plan_for(colluder, params, d).pair_seeds;
    view.colluder_transcripts.push_back(std::move(transcript));
  }
  return view;
}

TrialResult run_trial(const TrialSpec& spec, std::uint64_t trial_index) {
  validate_spec(spec);
  const int d = spec.cfg.d;
  TrialResult result;

  if (spec.mechanism == Mechanism::kCdp ||
      spec.mechanism == Mechanism::kSecAggIdeal) {
    // Trusted aggregation: exact mean plus one Gaussian perturbation
    // calibrated to the mean's sensitivity (the per-user scale shrinks by
    // 1/u).
    const Seed256 seed = trial_seed(spec.master_seed, trial_index);
    SequentialRng input_rng(seed, kStreamInputs);
    SequentialRng responding_rng(seed, kStreamResponding);
    const auto x = draw_inputs(spec, input_rng);
    result.responding = draw_responding(spec, responding_rng);
    const int u = static_cast<int>(result.responding.size());
    result.u_size = u;
    result.true_mean.assign(d, 0.0);
    for (int i : result.responding) {
      for (int k = 0; k < d; ++k) result.true_mean[k] += x[i][k] / u;
    }
    SequentialRng server_rng(seed, kStreamServerNoise);
    const double s2ed = sigma_eps_delta(spec.budget).sigma2_eps_delta;
    const double scale = spec.sigma2_override >= 0.0
                             ? std::sqrt(spec.sigma2_override)
                             : std::sqrt(s2ed) / u;
    result.estimate = result.true_mean;
    for (int k = 0; k < d; ++k) result.estimate[k] += scale * server_rng.gaussian();
  } else {
    ServerView view = observe_trial(spec, trial_index);
    const int u = static_cast<int>(view.responding.size());
    result.u_size = u;
    result.responding = view.responding;
    result.true_mean = view.true_mean;
    const DecoderWeights weights =
        optimal_decoder(u, d, simulation_params(spec), spec.estimator);
    result.estimate.assign(d, 0.0);
    for (const EncodedVector& payload : view.payloads) {
      for (int k = 0; k < d; ++k) {
        result.estimate[k] += weights.alpha * payload.payload[k] / u;
      }
    }
  }

  for (int k = 0; k < d; ++k) {
    const double e = result.estimate[k] - result.true_mean[k];
    result.squared_error += e * e;
  }
  return result;
}

ExperimentSummary run_experiment(const TrialSpec& spec, int trials,
                                 int threads) {
  if (trials < 2) throw ConfigError("need at least 2 trials for a CI");
  std::vector<TrialResult> results(trials);
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, trials));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < trials; i += workers) {
        results[i] = run_trial(spec, static_cast<std::uint64_t>(i));
      }
    });
  }
  for (auto& th : pool) th.join();

  // Serial reduction in trial order keeps summaries independent of the
  // thread count.
  ExperimentSummary summary;
  summary.trials = trials;
  summary.mean_bias.assign(spec.cfg.d, 0.0);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& r : results) {
    sum += r.squared_error;
    sumsq += r.squared_error * r.squared_error;
    auto& bucket = summary.per_u_size[r.u_size];
    bucket.trials += 1;
    bucket.mean_mse += r.squared_error;
    for (int k = 0; k < spec.cfg.d; ++k) {
      summary.mean_bias[k] += (r.estimate[k] - r.true_mean[k]) / trials;
    }
  }
  summary.mean_mse = sum / trials;
  const double var =
      std::max(0.0, (sumsq - trials * summary.mean_mse * summary.mean_mse) /
                        (trials - 1.0));
  summary.std_error = std::sqrt(var / trials);
  summary.ci_low = summary.mean_mse - 1.96 * summary.std_error;
  summary.ci_high = summary.mean_mse + 1.96 * summary.std_error;
  for (auto& [u, bucket] : summary.per_u_size) {
    bucket.mean_mse /= bucket.trials;
  }
  return summary;
}

void dump_trials_csv(std::ostream& os, const TrialSpec& spec, int trials) {
  os << "trial,u_size,squared_error\n";
  char value[40];
  for (int i = 0; i < trials; ++i) {
    const TrialResult r = run_trial(spec, static_cast<std::uint64_t>(i));
    std::snprintf(value, sizeof(value), "%.10g", r.squared_error);
    os << i << ',' << r.u_size << ',' << value << '\n';
  }
}

ConditionalStats adversary_conditional_stats(const TrialSpec& spec,
                                             int target_user, int trials) {
  validate_spec(spec);
  if (trials < 16) throw ConfigError("need more trials for the regression");
  if (target_user < 0 || target_user >= spec.cfg.n) {
    throw ConfigError("target user out of range");
  }
  for (int colluder : spec.colluding_set) {
    if (colluder == target_user) {
      throw ConfigError("target user must be honest");
    }
  }
  const NoiseParams params = simulation_params(spec);
  const double s2ed = sigma_eps_delta(spec.budget).sigma2_eps_delta;
  const int n = spec.cfg.n;
  const int d = spec.cfg.d;

  // Honest users, target first.
  std::vector<int> honest{target_user};
  for (int i = 0; i < n; ++i) {
    const bool colluding = std::find(spec.colluding_set.begin(),
                                     spec.colluding_set.end(),
                                     i) != spec.colluding_set.end();
    if (!colluding && i != target_user) honest.push_back(i);
  }
  const int m = static_cast<int>(honest.size());

  // Pooled per-coordinate covariance of the colluder-adjusted noise
  // (coordinates are i.i.d., so every coordinate is one sample).
  Eigen::MatrixXd second_moments = Eigen::MatrixXd::Zero(m, m);
  std::int64_t samples = 0;
  Eigen::MatrixXd adjusted(m, d);
  for (int trial = 0; trial < trials; ++trial) {
    const Seed256 seed = trial_seed(spec.master_seed, trial);
    const DealtSeeds dealt = deal_seeds(n, seed);
    const double pair_var = -params.rho * params.sigma2;
    for (int row = 0; row < m; ++row) {
      const int i = honest[row];
      auto z = generate_user_noise(dealt.plan_for(i, params, d));
      // Subtract every pad the colluders hand to the server.
      for (int colluder : spec.colluding_set) {
        const auto pad = shared_pair_sample(
            PairSeed{std::min(i, colluder), std::max(i, colluder),
                     dealt.pair_seed(i, colluder)},
            d, pair_var);
        const double sign = colluder < i ? 1.0 : -1.0;
        for (int k = 0; k < d; ++k) z[k] -= sign * pad[k];
      }
      for (int k = 0; k < d; ++k) adjusted(row, k) = z[k];
    }
    second_moments += adjusted * adjusted.transpose();
    samples += d;
  }
  second_moments /= static_cast<double>(samples);

  // Residual variance of the target given the other honest payloads.
  const Eigen::VectorXd cross = second_moments.block(1, 0, m - 1, 1);
  const Eigen::MatrixXd others = second_moments.block(1, 1, m - 1, m - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(others);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("payload covariance is not positive definite");
  }
  const double explained = cross.dot(llt.solve(cross));
  ConditionalStats stats;
  stats.samples = samples;
  stats.residual_variance = second_moments(0, 0) - explained;
  stats.closed_form =
      privacy_margin(n, static_cast<int>(spec.colluding_set.size()),
                     params.sigma2, params.r(), s2ed) +
      s2ed;
  stats.std_error =
      stats.residual_variance * std::sqrt(2.0 / static_cast<double>(samples));
  return stats;
}

}  // namespace cordp
