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

#ifndef CORDP_TYPES_HPP_
#define CORDP_TYPES_HPP_

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cordp {

// Invalid user-supplied parameters (rejected at construction, never clamped).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The calibration bracket could not be established for the given budget.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested noise variance cannot satisfy the privacy constraint.
class FeasibilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A matrix is numerically singular or too ill-conditioned to trust.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (epsilon, delta) pair governing all calibration.
struct PrivacyBudget {
  double epsilon;
  double delta;

  PrivacyBudget(double eps, double del) : epsilon(eps), delta(del) {
    if (!std::isfinite(eps) || eps <= 0.0) {
      throw ConfigError("epsilon must be positive and finite, got " +
                        std::to_string(eps));
    }
    if (!std::isfinite(del) || del <= 0.0 || del >= 1.0) {
      throw ConfigError("delta must lie in (0, 1), got " +
                        std::to_string(del));
    }
  }
};

// (n, t, c, d): population, responding-user threshold, collusion threshold,
// vector dimension.  Requires c < t <= n; c >= t is rejected, not clamped.
struct SystemConfig {
  int n;
  int t;
  int c;
  int d;

  SystemConfig(int n_users, int min_responding, int max_colluding, int dim)
      : n(n_users), t(min_responding), c(max_colluding), d(dim) {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (t < 1 || t > n) throw ConfigError("t must satisfy 1 <= t <= n");
    if (c < 0 || c >= t) throw ConfigError("c must satisfy 0 <= c < t");
    if (d < 1) throw ConfigError("d must be >= 1");
  }
};

// Exchangeable Gaussian noise distribution: per-user variance sigma2 and
// common pairwise correlation rho; the off-diagonal covariance entry is
// r = rho * sigma2.  When the no-dropout optimum pushes sigma2 to infinity,
// the parameters are stored symbolically (limit_mode) together with the
// finite limit of the aggregate variance sigma2 + r(n-1).
struct NoiseParams {
  double sigma2 = 0.0;
  double rho = 0.0;
  bool limit_mode = false;
  // Valid only in limit_mode:
  int limit_n = 0;
  double limit_effective_var = 0.0;

  static NoiseParams finite(double sigma2, double rho) {
    if (!std::isfinite(sigma2) || sigma2 < 0.0) {
      throw ConfigError("sigma2 must be finite and non-negative");
    }
    if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
      throw ConfigError("rho must lie in [-1, 1]");
    }
    NoiseParams p;
    p.sigma2 = sigma2;
    p.rho = rho;
    return p;
  }

  static NoiseParams limit(int n, double rho_limit, double effective_var) {
    NoiseParams p;
    p.sigma2 = std::numeric_limits<double>::infinity();
    p.rho = rho_limit;
    p.limit_mode = true;
    p.limit_n = n;
    p.limit_effective_var = effective_var;
    return p;
  }

  double r() const { return rho * sigma2; }
};

enum class EstimatorKind {
  kBiasedOptimal,  // common shrinkage weight minimizing worst-case MSE
  kUnbiased,       // alpha = 1
};

// Common scalar weight applied to all responding users.
struct DecoderWeights {
  double alpha;
  int u_size;
};

}  // namespace cordp

#endif  // CORDP_TYPES_HPP_
