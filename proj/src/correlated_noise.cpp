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

#include "cordp/correlated_noise.hpp"

#include <cmath>
#include <cstring>

namespace cordp {
namespace {

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t read_u32(std::span<const std::uint8_t> bytes, size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double read_f64(std::span<const std::uint8_t> bytes, size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

const Seed256& DealtSeeds::pair_seed(int i, int j) const {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    throw ConfigError("invalid pair indices");
  }
  return i < j ? pair[i][j] : pair[j][i];
}

UserNoisePlan DealtSeeds::plan_for(int user, const NoiseParams& params,
                                   int d) const {
  if (user < 0 || user >= n) throw ConfigError("invalid user index");
  if (params.limit_mode) {
    throw ConfigError("sampling requires finite noise parameters");
  }
  UserNoisePlan plan;
  plan.user = user;
  plan.n = n;
  plan.d = d;
  plan.params = params;
  plan.own_seed = own[user];
  for (int j = 0; j < n; ++j) {
    if (j == user) continue;
    plan.pair_seeds.emplace(
        j, PairSeed{std::min(user, j), std::max(user, j), pair_seed(user, j)});
  }
  return plan;
}

DealtSeeds deal_seeds(int n, const Seed256& master) {
  if (n < 2) throw ConfigError("need n >= 2 users to deal pair seeds");
  DealtSeeds dealt;
  dealt.n = n;
  dealt.own.resize(n);
  dealt.pair.assign(n, std::vector<Seed256>(n));
  for (int i = 0; i < n; ++i) {
    dealt.own[i] = derive_seed(master, kTagOwnSeed,
                               static_cast<std::uint32_t>(i), 0);
    for (int j = i + 1; j < n; ++j) {
      dealt.pair[i][j] = derive_seed(master, kTagPairSeed,
                                     static_cast<std::uint32_t>(i),
                                     static_cast<std::uint32_t>(j));
    }
  }
  return dealt;
}

std::vector<double> shared_pair_sample(const PairSeed& seed, int d,
                                       double variance) {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (variance < 0.0 || !std::isfinite(variance)) {
    throw std::domain_error("shared-sample variance must be non-negative");
  }
  std::vector<double> sample(d, 0.0);
  if (variance == 0.0) return sample;
  const ChaChaStream stream(seed.seed, kStreamPairNoise, 0, 0);
  const double scale = std::sqrt(variance);
  for (int k = 0; k < d; ++k) {
    sample[k] = scale * stream.gaussian(static_cast<std::uint64_t>(k));
  }
  return sample;
}

std::vector<double> generate_user_noise(const UserNoisePlan& plan) {
  const NoiseParams& p = plan.params;
  const double own_var = p.sigma2 * (1.0 + p.rho * (plan.n - 1));
  if (own_var < -1e-12) {
    throw std::domain_error(
        "sigma2 (1 + rho (n-1)) < 0: not a valid covariance");
  }
  if (p.rho > 0.0) {
    throw std::domain_error(
        "positive correlation is not supported by the pairwise-seed "
        "decomposition (the optimum never needs it)");
  }
  const double pair_var = -p.rho * p.sigma2;

  std::vector<double> z(plan.d, 0.0);
  for (const auto& [peer, seed] : plan.pair_seeds) {
    const std::vector<double> s = shared_pair_sample(seed, plan.d, pair_var);
    const double sign = peer < plan.user ? 1.0 : -1.0;
    for (int k = 0; k < plan.d; ++k) z[k] += sign * s[k];
  }
  const ChaChaStream own(plan.own_seed, kStreamOwnNoise, 0, 0);
  const double own_scale = std::sqrt(std::max(own_var, 0.0));
  for (int k = 0; k < plan.d; ++k) {
    z[k] += own_scale * own.gaussian(static_cast<std::uint64_t>(k));
  }
  return z;
}

EncodedVector encode(int user, std::span<const double> x,
                     std::span<const double> z) {
  if (x.size() != z.size()) throw ConfigError("x and z dimensions differ");
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  if (norm2 > 1.0 + 1e-12) {
    throw std::domain_error("input vector lies outside the unit ball");
  }
  EncodedVector out;
  out.user = user;
  out.payload.resize(x.size());
  for (size_t k = 0; k < x.size(); ++k) out.payload[k] = x[k] + z[k];
  return out;
}

void CovarianceAccumulator::add(std::span<const double> joint, int n, int d) {
  if (n < 2 || d < 1 || joint.size() != static_cast<size_t>(n) * d) {
    throw ConfigError("joint draw must be an n x d matrix with n >= 2");
  }
  // Per-draw statistics; their across-draw means are unbiased moment
  // estimates and their spread yields standard errors.
  double var_stat = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double v = joint[i * d + k];
      var_stat += v * v;
    }
  }
  var_stat /= static_cast<double>(n) * d;

  double cov_stat = 0.0;
  for (int k = 0; k < d; ++k) {
    double col_sum = 0.0, col_sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = joint[i * d + k];
      col_sum += v;
      col_sumsq += v * v;
    }
    cov_stat += (col_sum * col_sum - col_sumsq) / (n * (n - 1.0));
  }
  cov_stat /= d;

  double cross_stat = 0.0;
  if (d > 1) {
    // sum_{k != k'} R_k R_k' with R_k = sum_i joint[i][k] covers all (i, j)
    // user pairs at once.
    double r_sum = 0.0, r_sumsq = 0.0;
    for (int k = 0; k < d; ++k) {
      double col_sum = 0.0;
      for (int i = 0; i < n; ++i) col_sum += joint[i * d + k];
      r_sum += col_sum;
      r_sumsq += col_sum * col_sum;
    }
    cross_stat = (r_sum * r_sum - r_sumsq) /
                 (static_cast<double>(d) * (d - 1) * n * n);
  }

  ++count_;
  sum_var_ += var_stat;
  sumsq_var_ += var_stat * var_stat;
  sum_cov_ += cov_stat;
  sumsq_cov_ += cov_stat * cov_stat;
  sum_cross_ += cross_stat;
  sumsq_cross_ += cross_stat * cross_stat;
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& other) {
  count_ += other.count_;
  sum_var_ += other.sum_var_;
  sumsq_var_ += other.sumsq_var_;
  sum_cov_ += other.sum_cov_;
  sumsq_cov_ += other.sumsq_cov_;
  sum_cross_ += other.sum_cross_;
  sumsq_cross_ += other.sumsq_cross_;
}

CovarianceEstimate CovarianceAccumulator::finalize() const {
  if (count_ < 2) throw ConfigError("need at least 2 draws");
  const double m = static_cast<double>(count_);
  auto se = [m](double sum, double sumsq) {
    const double mean = sum / m;
    const double var = std::max(0.0, (sumsq - m * mean * mean) / (m - 1.0));
    return std::sqrt(var / m);
  };
  CovarianceEstimate est;
  est.draws = count_;
  est.variance = sum_var_ / m;
  est.covariance = sum_cov_ / m;
  est.cross_coordinate = sum_cross_ / m;
  est.variance_se = se(sum_var_, sumsq_var_);
  est.covariance_se = se(sum_cov_, sumsq_cov_);
  est.cross_coordinate_se = se(sum_cross_, sumsq_cross_);
  return est;
}

CovarianceEstimate empirical_covariance(
    const std::vector<std::vector<double>>& samples, int n, int d) {
  CovarianceAccumulator acc;
  for (const auto& joint : samples) acc.add(joint, n, d);
  return acc.finalize();
}

std::vector<std::uint8_t> serialize_pair_seed(const PairSeed& seed) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 + 4 + 32);
  append_u32(out, 40);  // payload length
  append_u32(out, static_cast<std::uint32_t>(seed.i));
  append_u32(out, static_cast<std::uint32_t>(seed.j));
  out.insert(out.end(), seed.seed.begin(), seed.seed.end());
  return out;
}

PairSeed deserialize_pair_seed(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || read_u32(bytes, 0) != 40 || bytes.size() != 44) {
    throw ConfigError("malformed pair-seed record");
  }
  PairSeed seed;
  seed.i = static_cast<int>(read_u32(bytes, 4));
  seed.j = static_cast<int>(read_u32(bytes, 8));
  std::copy(bytes.begin() + 12, bytes.begin() + 44, seed.seed.begin());
  return seed;
}

std::vector<std::uint8_t> serialize_encoded(const EncodedVector& v) {
  std::vector<std::uint8_t> out;
  const std::uint32_t payload_len =
      8 + 8 * static_cast<std::uint32_t>(v.payload.size());
  out.reserve(4 + payload_len);
  append_u32(out, payload_len);
  append_u32(out, static_cast<std::uint32_t>(v.user));
  append_u32(out, static_cast<std::uint32_t>(v.payload.size()));
  for (double x : v.payload) append_f64(out, x);
  return out;
}

EncodedVector deserialize_encoded(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ConfigError("malformed encoded-vector record");
  const std::uint32_t payload_len = read_u32(bytes, 0);
  const std::uint32_t d = read_u32(bytes, 8);
  if (payload_len != 8 + 8 * d || bytes.size() != 4 + payload_len) {
    throw ConfigError("malformed encoded-vector record");
  }
  EncodedVector v;
  v.user = static_cast<int>(read_u32(bytes, 4));
  v.payload.resize(d);
  for (std::uint32_t k = 0; k < d; ++k) v.payload[k] = read_f64(bytes, 12 + 8 * k);
  return v;
}

}  // namespace cordp
