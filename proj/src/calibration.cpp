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

#include "cordp/calibration.hpp"

#include <cmath>
#include <limits>

namespace cordp {
namespace {

constexpr double kBracketLo = 1e-6;
constexpr double kBracketHi = 1e6;
constexpr double kLogSpaceEpsilon = 30.0;
constexpr double kSqrt2Pi = 2.5066282746310002;

// Standard normal CDF via the complementary error function (absolute error
// well below 1e-12 over the range of interest).
double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// log Phi(x) for x < 0, falling back to the asymptotic expansion
// log Phi(x) ~ -x^2/2 - log(-x sqrt(2 pi)) once erfc underflows.
double log_standard_normal_cdf_negative(double x) {
  const double p = standard_normal_cdf(x);
  if (p > 0.0) return std::log(p);
  const double ax = -x;
  return -0.5 * ax * ax - std::log(ax * kSqrt2Pi) +
         std::log1p(-1.0 / (ax * ax));
}

}  // namespace

double gaussian_dp_gap(double sigma, double epsilon) {
  if (!std::isfinite(sigma) || sigma <= 0.0 || !std::isfinite(epsilon) ||
      epsilon <= 0.0) {
    throw std::domain_error("gaussian_dp_gap requires positive finite inputs");
  }
  const double a = 1.0 / (2.0 * sigma) - epsilon * sigma;
  const double b = -1.0 / (2.0 * sigma) - epsilon * sigma;
  if (epsilon > kLogSpaceEpsilon) {
    const double log_term = epsilon + log_standard_normal_cdf_negative(b);
    if (log_term >= 709.0) {  // product overflows, gap is far below any delta
      return -std::numeric_limits<double>::infinity();
    }
    return standard_normal_cdf(a) - std::exp(log_term);
  }
  return standard_normal_cdf(a) - std::exp(epsilon) * standard_normal_cdf(b);
}

CalibratedVariance sigma_eps_delta(const PrivacyBudget& budget, double tol) {
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  const double eps = budget.epsilon;
  const double delta = budget.delta;

  double lo = kBracketLo;
  double hi = kBracketHi;
  const double gap_lo = gaussian_dp_gap(lo, eps);
  const double gap_hi = gaussian_dp_gap(hi, eps);
  if (!(gap_lo > delta) || !(gap_hi <= delta) || !std::isfinite(gap_lo)) {
    throw CalibrationError("failed to bracket the calibration target for eps=" +
                           std::to_string(eps) +
                           " delta=" + std::to_string(delta));
  }

  // Bisection on sigma (not sigma^2); the gap is strictly decreasing.
  while (hi - lo > tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_dp_gap(mid, eps) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return CalibratedVariance{hi * hi, gaussian_dp_gap(hi, eps)};
}

double sigma_upper_bound(const PrivacyBudget& budget) {
  const double eps = budget.epsilon;
  const double delta = budget.delta;
  if (eps < 1.0) {
    return 8.0 * std::log(1.25 / delta) / (eps * eps);
  }
  const double eta = delta <= 0.05
                         ? 1.0 + 2.0 * std::sqrt(std::log(1.0 / (2.0 * delta)))
                         : 1.0 + 2.0 * std::sqrt(std::log(10.0));
  return 2.0 * eta * eta / eps;
}

}  // namespace cordp
