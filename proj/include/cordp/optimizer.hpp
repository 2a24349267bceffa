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
// Closed-form optimal noise parameters for correlated-Gaussian distributed
// mean estimation, the matching optimal linear decoder, analytic MSE
// formulas, privacy-feasibility checks, and an independent brute-force grid
// oracle used to cross-check the closed forms.

#ifndef CORDP_OPTIMIZER_HPP_
#define CORDP_OPTIMIZER_HPP_

#include "cordp/calibration.hpp"
#include "cordp/types.hpp"

namespace cordp {

// Admissible off-diagonal covariance entries r = rho * sigma2 for a fixed
// per-user variance.  A closed interval for c = 0, a half-line otherwise.
struct RRange {
  double lower;
  double upper;          // meaningful only when upper_bounded
  bool upper_bounded;
};

// sigma2 * (1 + rho * (u_size - 1)): per-coordinate variance of the sum of
// u_size users' noise, divided by u_size.  In limit_mode the value is only
// defined at u_size == n (a dropout leaves infinite residual variance).
double effective_aggregate_variance(const NoiseParams& params, int u_size);

// Limiting value of sigma2 + r(n-1) as sigma2 -> infinity along the optimal
// r(sigma2) curve: sigma2_eps_delta / (n - c).  Requires c < n - 1 (at
// c = n - 1 the scheme degenerates to the independent-noise point).
double limit_effective_variance(int n, int c, double sigma2_eps_delta);

// Admissible r for fixed sigma2 >= sigma2_eps_delta; throws FeasibilityError
// below that threshold.  Every returned r also keeps sigma2 + r(n-1) > 0.
RRange feasible_r_range(int n, int c, double sigma2, double sigma2_eps_delta);

// The MSE-optimal r at fixed sigma2: the lower endpoint of feasible_r_range.
double optimal_r_at(int n, int c, double sigma2, double sigma2_eps_delta);

// Conditional residual variance of one honest user's payload given all other
// honest payloads and c colluder transcripts, minus sigma2_eps_delta:
//
//   (sigma2 + r(c-1)) (sigma2 + r(n-1)) / (sigma2 + r(n-2)) - sigma2_eps_delta
//
// Non-negative iff the privacy constraint holds.  Requires
// sigma2 + r(n-2) > 0.
double privacy_margin(int n, int c, double sigma2, double r,
                      double sigma2_eps_delta);

// Optimal (sigma2, rho) for the worst-case dropout/collusion problem.
//   c = n-1       -> the independent-noise point (sigma2_eps_delta, 0)
//   t = n, c<n-1  -> limit_mode (sigma2 -> infinity, rho -> -1/(n-1))
//   c < t < n     -> finite closed forms.
NoiseParams optimal_params(const SystemConfig& cfg, const PrivacyBudget& budget);
// Overload with a pre-computed calibration (saves re-solving in sweeps).
NoiseParams optimal_params(const SystemConfig& cfg, double sigma2_eps_delta);

// alpha* = 1 / (1 + (d sigma2 / u)(1 + rho (u-1))) for the biased-optimal
// decoder; alpha = 1 for the unbiased decoder.
DecoderWeights optimal_decoder(int u_size, int d, const NoiseParams& params,
                               EstimatorKind kind);

// Worst-case-input MSE of the mean estimate over u_size responding users:
//   biased:   (1 + (u/d) / eff)^{-1}
//   unbiased: d * eff / u
// where eff = effective_aggregate_variance(params, u_size).
double analytic_mse(int u_size, int d, const NoiseParams& params,
                    EstimatorKind kind);

// max over u in [t, n] of analytic_mse(u).  Scans every u and checks the
// maximum is attained at u = t, which doubles as a regression test of the
// monotonicity argument.
double worst_case_mse(const SystemConfig& cfg, const NoiseParams& params,
                      EstimatorKind kind);

struct GridSpec {
  int sigma_steps = 400;
  int r_steps = 400;
  double sigma2_cap_multiplier = 20.0;  // cap = multiplier * sigma2_eps_delta
  int threads = 0;                      // 0 = hardware concurrency
};

struct GridResult {
  NoiseParams params;   // best grid point
  double mse;           // worst_case_mse at the best grid point
  double sigma2_cell;   // grid spacing in the sigma2 direction
  double r_cell;        // r spacing of the winning sigma2 slice
};

// Brute-force anti-drift oracle: scans a sigma2 grid over
// [sigma2_eps_delta, cap] and, within each slice, an r grid over the
// feasible range clipped to r <= 0; keeps the point minimizing
// worst_case_mse among those with privacy_margin >= 0.  Slices run in
// parallel.  Throws FeasibilityError if no grid point is feasible.
GridResult grid_oracle(const SystemConfig& cfg, const PrivacyBudget& budget,
                       EstimatorKind kind, const GridSpec& grid = {});

}  // namespace cordp

#endif  // CORDP_OPTIMIZER_HPP_
