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

#ifndef CORDP_CALIBRATION_HPP_
#define CORDP_CALIBRATION_HPP_

#include "cordp/types.hpp"

namespace cordp {

// Smallest variance meeting the exact analytic Gaussian-mechanism condition,
// plus the value of the CDF gap actually achieved at the returned point.
struct CalibratedVariance {
  double sigma2_eps_delta;
  double achieved_gap;  // <= delta up to solver tolerance
};

// Exact privacy gap of the Gaussian mechanism at noise scale `sigma` (per
// unit of L2 sensitivity):
//
//   gap(sigma, eps) = Phi(1/(2 sigma) - eps sigma)
//                     - e^eps Phi(-1/(2 sigma) - eps sigma)
//
// where Phi is the standard normal CDF.  The mechanism is (eps, delta)-DP
// iff gap <= delta.  The gap is strictly decreasing in sigma, tends to 1 as
// sigma -> 0+ and to 0 as sigma -> infinity.  The e^eps * Phi(.) product is
// evaluated in log space for eps > 30 to avoid overflow.
double gaussian_dp_gap(double sigma, double epsilon);

// Minimal noise variance sigma^2 with gap(sigma, eps) <= delta, found by
// bisection on sigma over [1e-6, 1e6] (globally convergent because the gap
// is strictly decreasing).  Terminates when the bracket width drops below
// tol * sigma; the returned point is the upper bracket end, so the privacy
// condition is guaranteed to hold.  Throws CalibrationError if the initial
// bracket does not straddle delta.
CalibratedVariance sigma_eps_delta(const PrivacyBudget& budget,
                                   double tol = 1e-6);

// Closed-form upper bounds on sigma2_eps_delta:
//   8 ln(1.25/delta) / eps^2                for eps, delta in (0,1)
//   2 eta^2 / eps                           for eps >= 1,
// with eta = 1 + 2 sqrt(ln(1/(2 delta))) for delta <= 0.05 and
// eta = 1 + 2 sqrt(ln 10) otherwise.
double sigma_upper_bound(const PrivacyBudget& budget);

}  // namespace cordp

#endif  // CORDP_CALIBRATION_HPP_
