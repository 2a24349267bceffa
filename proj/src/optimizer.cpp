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

#include "cordp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace cordp {
namespace {

constexpr double kScanSlack = 1e-12;

void check_population(int n, int c) {
  if (n < 2) throw ConfigError("need n >= 2");
  if (c < 0 || c >= n) throw ConfigError("need 0 <= c < n");
}

}  // namespace

double effective_aggregate_variance(const NoiseParams& params, int u_size) {
  if (u_size < 1) throw ConfigError("u_size must be >= 1");
  if (params.limit_mode) {
    if (u_size != params.limit_n) {
      throw std::domain_error(
          "limit-mode variance is infinite under dropout (u_size < n)");
    }
    return params.limit_effective_var;
  }
  const double v = params.sigma2 * (1.0 + params.rho * (u_size - 1));
  if (v < -1e-12) {
    throw std::domain_error("rho is below -1/(u_size-1): invalid covariance");
  }
  return std::max(v, 0.0);
}

double limit_effective_variance(int n, int c, double sigma2_eps_delta) {
  check_population(n, c);
  if (c >= n - 1) {
    throw ConfigError(
        "c = n-1 has no infinite-variance limit; use the independent-noise "
        "point instead");
  }
  return sigma2_eps_delta / (n - c);
}

RRange feasible_r_range(int n, int c, double sigma2, double sigma2_eps_delta) {
  check_population(n, c);
  if (sigma2 < sigma2_eps_delta) {
    throw FeasibilityError("sigma2 < sigma2_eps_delta: no feasible r exists");
  }
  const double excess = sigma2 - sigma2_eps_delta;
  if (c == 0) {
    const double a = (n - 2) * excess / (2.0 * (n - 1));
    const double b =
        std::sqrt((n - 2) * (n - 2) * excess * excess +
                  4.0 * (n - 1) * sigma2 * excess) /
        (2.0 * (n - 1));
    return RRange{a - b, a + b, true};
  }
  if (c == 1) {
    // The quadratic degenerates to a linear constraint.
    const double denom = sigma2 * (n - 1) - sigma2_eps_delta * (n - 2);
    return RRange{-sigma2 * excess / denom, 0.0, false};
  }
  // Larger root of the feasibility quadratic.  The numerator offset and the
  // term inside the square differ in the sign of sigma2 * c.
  const double offset = (n - 2) * excess + sigma2 * c;
  const double inner = (n - 2) * excess - sigma2 * c;
  const double disc = inner * inner + 4.0 * (n - c - 1) * sigma2 * excess;
  const double lower = (-offset + std::sqrt(disc)) / (2.0 * (n - 1) * (c - 1));
  return RRange{lower, 0.0, false};
}

double optimal_r_at(int n, int c, double sigma2, double sigma2_eps_delta) {
  return feasible_r_range(n, c, sigma2, sigma2_eps_delta).lower;
}

double privacy_margin(int n, int c, double sigma2, double r,
                      double sigma2_eps_delta) {
  check_population(n, c);
  const double denom = sigma2 + r * (n - 2);
  if (!(denom > 0.0)) {
    throw std::domain_error("degenerate conditioning denominator");
  }
  const double cond_var =
      (sigma2 + r * (c - 1)) * (sigma2 + r * (n - 1)) / denom;
  return cond_var - sigma2_eps_delta;
}

NoiseParams optimal_params(const SystemConfig& cfg, double s2ed) {
  const int n = cfg.n;
  const int t = cfg.t;
  const int c = cfg.c;
  if (c == n - 1) {
    // Every feasible point gives the same MSE; the independent-noise point
    // at minimal variance suffices.
    return NoiseParams::finite(s2ed, 0.0);
  }
  if (t == n) {
    return NoiseParams::limit(n, -1.0 / (n - 1),
                              limit_effective_variance(n, c, s2ed));
  }
  // c < t < n: finite optimum.  Configurations like t = 1 or c = t - 1 land
  // exactly on the variance floor, where rounding may push the value a few
  // ulps below it; clamp so the feasibility algebra stays real.
  const double nc = n - c;
  const double sigma2 = std::max(
      s2ed,
      s2ed * (n * n - 2.0 * n - c * n + 2.0) / (nc * nc) +
          s2ed * (n - c - 1.0) * (n + c - 2.0 * n * c + t * (n + c - 2.0)) /
              (nc * nc *
               std::sqrt(static_cast<double>(t - c) * (n - t) * (n - c - 1))));
  double rho;
  if (c == 1) {
    rho = -(sigma2 - s2ed) / (sigma2 * (n - 1) - s2ed * (n - 2));
  } else {
    const double shrink = 1.0 - s2ed / sigma2;
    const double inner = (n - 2) * shrink - c;
    const double disc =
        std::max(0.0, inner * inner + 4.0 * (n - c - 1) * shrink);
    rho = (-(n - 2) * shrink - c + std::sqrt(disc)) /
          (2.0 * (n - 1) * (c - 1));
  }
  return NoiseParams::finite(sigma2, rho);
}

NoiseParams optimal_params(const SystemConfig& cfg,
                           const PrivacyBudget& budget) {
  return optimal_params(cfg, sigma_eps_delta(budget).sigma2_eps_delta);
}

DecoderWeights optimal_decoder(int u_size, int d, const NoiseParams& params,
                               EstimatorKind kind) {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (kind == EstimatorKind::kUnbiased) {
    return DecoderWeights{1.0, u_size};
  }
  const double eff = effective_aggregate_variance(params, u_size);
  return DecoderWeights{1.0 / (1.0 + d * eff / u_size), u_size};
}

double analytic_mse(int u_size, int d, const NoiseParams& params,
                    EstimatorKind kind) {
  if (d < 1) throw ConfigError("d must be >= 1");
  const double eff = effective_aggregate_variance(params, u_size);
  if (kind == EstimatorKind::kUnbiased) {
    return d * eff / u_size;
  }
  if (eff == 0.0) return 0.0;
  return 1.0 / (1.0 + (static_cast<double>(u_size) / d) / eff);
}

double worst_case_mse(const SystemConfig& cfg, const NoiseParams& params,
                      EstimatorKind kind) {
  if (params.limit_mode) {
    if (cfg.t != cfg.n) {
      throw std::domain_error(
          "limit-mode params are only evaluable without dropouts (t = n)");
    }
    return analytic_mse(cfg.n, cfg.d, params, kind);
  }
  double max_mse = 0.0;
  int arg_u = cfg.t;
  for (int u = cfg.t; u <= cfg.n; ++u) {
    const double m = analytic_mse(u, cfg.d, params, kind);
    if (m > max_mse) {
      max_mse = m;
      arg_u = u;
    }
  }
  // For any valid covariance the scan maximum sits at the smallest
  // responding set; a violation means the parameters are out of contract.
  const double at_t = analytic_mse(cfg.t, cfg.d, params, kind);
  if (max_mse > at_t * (1.0 + 1e-9) + kScanSlack) {
    throw std::logic_error("worst-case scan maximum not attained at u = t (u=" +
                           std::to_string(arg_u) + ")");
  }
  return max_mse;
}

GridResult grid_oracle(const SystemConfig& cfg, const PrivacyBudget& budget,
                       EstimatorKind kind, const GridSpec& grid) {
  if (grid.sigma_steps < 2 || grid.r_steps < 2) {
    throw ConfigError("grid needs at least 2 steps per axis");
  }
  const double s2ed = sigma_eps_delta(budget).sigma2_eps_delta;
  const double cap = grid.sigma2_cap_multiplier * s2ed;
  if (!(cap > s2ed)) throw ConfigError("sigma2 cap must exceed the floor");
  const double dsigma2 = (cap - s2ed) / (grid.sigma_steps - 1);

  struct SliceBest {
    double mse = std::numeric_limits<double>::infinity();
    double sigma2 = 0.0;
    double r = 0.0;
    double r_cell = 0.0;
  };
  std::vector<SliceBest> best(grid.sigma_steps);

  auto scan_slice = [&](int si) {
    const double sigma2 = s2ed + si * dsigma2;
    const RRange range = feasible_r_range(cfg.n, cfg.c, sigma2, s2ed);
    // The optimum never needs positive correlation, so clip the scan there.
    const double r_hi = range.upper_bounded ? std::min(range.upper, 0.0) : 0.0;
    const double r_lo = range.lower;
    const double dr = (r_hi - r_lo) / (grid.r_steps - 1);
    SliceBest sb;
    sb.r_cell = dr;
    for (int ri = 0; ri < grid.r_steps; ++ri) {
      const double r = r_lo + ri * dr;
      if (privacy_margin(cfg.n, cfg.c, sigma2, r, s2ed) < -1e-9) continue;
      const double m = worst_case_mse(
          cfg, NoiseParams::finite(sigma2, r / sigma2), kind);
      if (m < sb.mse) {
        sb.mse = m;
        sb.sigma2 = sigma2;
        sb.r = r;
      }
    }
    best[si] = sb;
  };

  int workers = grid.threads > 0
                    ? grid.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, grid.sigma_steps));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int si = w; si < grid.sigma_steps; si += workers) scan_slice(si);
    });
  }
  for (auto& th : pool) th.join();

  const auto it = std::min_element(
      best.begin(), best.end(),
      [](const SliceBest& a, const SliceBest& b) { return a.mse < b.mse; });
  if (!std::isfinite(it->mse)) {
    throw FeasibilityError("grid oracle found no feasible point");
  }
  GridResult result;
  result.params = NoiseParams::finite(it->sigma2, it->r / it->sigma2);
  result.mse = it->mse;
  result.sigma2_cell = dsigma2;
  result.r_cell = it->r_cell;
  return result;
}

}  // namespace cordp
