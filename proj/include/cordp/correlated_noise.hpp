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
// Offline noise-generation protocol: a trusted dealer hands every unordered
// user pair a symmetric seed (standing in for a key exchange, which is out
// of scope), both endpoints derive the identical shared Gaussian vector from
// it, and each user assembles its noise as a signed sum of shared vectors
// plus an independent component.

#ifndef CORDP_CORRELATED_NOISE_HPP_
#define CORDP_CORRELATED_NOISE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cordp/prng.hpp"
#include "cordp/types.hpp"

namespace cordp {

// Symmetric seed for the unordered pair {i, j}; both users derive identical
// samples from it.  Canonical order i < j.
struct PairSeed {
  int i = 0;
  int j = 0;
  Seed256 seed{};
};

// Everything user `user` needs to generate its noise vector.
struct UserNoisePlan {
  int user = 0;
  int n = 0;
  int d = 0;
  NoiseParams params;
  Seed256 own_seed{};
  std::map<int, PairSeed> pair_seeds;  // one entry per peer j != user
};

struct EncodedVector {
  int user = 0;
  std::vector<double> payload;  // x + z, componentwise
};

// All seeds produced by one dealer run.  Fully deterministic in the master
// seed: pair seed {i,j} = keystream(master, kTagPairSeed, min, max), own
// seed i = keystream(master, kTagOwnSeed, i, 0).  Users are 0-based.
struct DealtSeeds {
  int n = 0;
  std::vector<Seed256> own;                 // [n]
  std::vector<std::vector<Seed256>> pair;   // pair[i][j], i < j valid

  const Seed256& pair_seed(int i, int j) const;
  UserNoisePlan plan_for(int user, const NoiseParams& params, int d) const;
};

DealtSeeds deal_seeds(int n, const Seed256& master);

// The d-vector both endpoints of the pair derive: i.i.d. N(0, variance)
// coordinates, variance = -rho * sigma2 (anti-correlation only; variance 0
// yields the zero vector by convention).
std::vector<double> shared_pair_sample(const PairSeed& seed, int d,
                                       double variance);

// Z_user = sum_{j < user} S_{user,j} - sum_{j > user} S_{user,j} + N_user,
// with N_user drawn from own_seed at variance sigma2 (1 + rho (n-1)).
std::vector<double> generate_user_noise(const UserNoisePlan& plan);

// payload = x + z.  Validates ||x||_2 <= 1 (+1e-12 slack).
EncodedVector encode(int user, std::span<const double> x,
                     std::span<const double> z);

// Unbiased sample moments of a batch of joint noise draws:
//  - variance: per-user per-coordinate variance,
//  - covariance: cross-user same-coordinate covariance,
//  - cross_coordinate: covariance across distinct coordinates (expected 0).
// Each estimate carries the standard error of its per-draw statistic.
struct CovarianceEstimate {
  double variance = 0.0;
  double covariance = 0.0;
  double cross_coordinate = 0.0;
  double variance_se = 0.0;
  double covariance_se = 0.0;
  double cross_coordinate_se = 0.0;
  std::int64_t draws = 0;
};

// Streaming accumulator so large batches never need to be materialized.
class CovarianceAccumulator {
 public:
  // joint is an n x d matrix flattened row-major: joint[user * d + coord].
  void add(std::span<const double> joint, int n, int d);
  void merge(const CovarianceAccumulator& other);
  CovarianceEstimate finalize() const;  // requires >= 2 draws

 private:
  std::int64_t count_ = 0;
  double sum_var_ = 0, sumsq_var_ = 0;
  double sum_cov_ = 0, sumsq_cov_ = 0;
  double sum_cross_ = 0, sumsq_cross_ = 0;
};

// Convenience wrapper over the accumulator; samples[k] is one joint draw
// flattened as in CovarianceAccumulator::add.
CovarianceEstimate empirical_covariance(
    const std::vector<std::vector<double>>& samples, int n, int d);

// Byte layouts for simulated wire transcripts (little-endian, length
// prefixed; see README).  Round-trips are exact.
std::vector<std::uint8_t> serialize_pair_seed(const PairSeed& seed);
PairSeed deserialize_pair_seed(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_encoded(const EncodedVector& v);
EncodedVector deserialize_encoded(std::span<const std::uint8_t> bytes);

}  // namespace cordp

#endif  // CORDP_CORRELATED_NOISE_HPP_
