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
// Verification lab for general (non-exchangeable) Gaussian covariances:
// worst-subset unbiased MSE, the inverse-diagonal privacy test, permutation
// averaging, and the randomized converse-property harness.  Everything here
// is exhaustive-small-n tooling, not a production path.

#ifndef CORDP_COVARIANCE_LAB_HPP_
#define CORDP_COVARIANCE_LAB_HPP_

#include <Eigen/Dense>
#include <ostream>
#include <vector>

#include "cordp/prng.hpp"
#include "cordp/types.hpp"

namespace cordp {

// Symmetric positive-definite n x n covariance of one noise coordinate
// across users.  Symmetry within 1e-12 and positive definiteness are
// enforced at construction.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd entries);

  int n() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  // Exchangeable matrix sigma2 I + r (11^T - I).
  static CovarianceMatrix exchangeable(int n, double sigma2, double r);

 private:
  Eigen::MatrixXd entries_;
};

// max over subsets U, t <= |U| <= n, of (d / |U|^2) 1_U^T Sigma 1_U by
// exhaustive enumeration.  Capped at n <= 20.
double unbiased_mse_of_sigma(const CovarianceMatrix& sigma, int t, int d);

struct PrivacyCheckResult {
  bool ok = false;
  std::vector<double> margins;  // 1/sigma2_eps_delta - (Sigma^{-1})_{ii}
};

// Per-user privacy test: every diagonal entry of Sigma^{-1} must be at most
// 1 / sigma2_eps_delta.  Throws ConditioningError when the condition number
// exceeds 1e12.
PrivacyCheckResult privacy_check_inverse_diag(const CovarianceMatrix& sigma,
                                              double sigma2_eps_delta);

// (1/n!) sum_i P_i Sigma P_i^T in closed form: diagonal entries replaced by
// their mean, off-diagonal entries by theirs.
CovarianceMatrix permutation_average(const CovarianceMatrix& sigma);

struct ConverseTrialReport {
  double mse_original = 0.0;
  double mse_averaged = 0.0;
  bool original_feasible = false;
  bool averaged_feasible = false;
  bool property_holds = false;  // mse_averaged <= mse_original + tolerance
  Eigen::MatrixXd sigma;
};

// Samples a random feasible Sigma (G G^T + eps I, scaled until the
// inverse-diagonal check passes), then verifies that permutation averaging
// does not increase the worst-subset MSE and preserves feasibility.
ConverseTrialReport converse_property_trial(int n, int t, int d,
                                            const PrivacyBudget& budget,
                                            const Seed256& seed);

// CSV rows (one per report): n, mse_original, mse_averaged, property_holds,
// min_margin, then the flattened upper triangle of Sigma.
void dump_converse_reports_csv(std::ostream& os,
                               const std::vector<ConverseTrialReport>& reports);

}  // namespace cordp

#endif  // CORDP_COVARIANCE_LAB_HPP_
