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

#include "cordp/covariance_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cordp/calibration.hpp"

namespace cordp {
namespace {

constexpr int kMaxSubsetN = 20;
constexpr double kMaxCondition = 1e12;
constexpr double kPropertyTol = 1e-9;

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    throw ConditioningError("matrix is singular or too ill-conditioned");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    throw ConfigError("covariance must be square and non-empty");
  }
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("covariance must be symmetric within 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw ConfigError("covariance must be positive definite");
  }
}

CovarianceMatrix CovarianceMatrix::exchangeable(int n, double sigma2,
                                                double r) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, r);
  m.diagonal().setConstant(sigma2);
  return CovarianceMatrix(std::move(m));
}

double unbiased_mse_of_sigma(const CovarianceMatrix& sigma, int t, int d) {
  const int n = sigma.n();
  if (t < 1 || t > n) throw ConfigError("t must satisfy 1 <= t <= n");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (n > kMaxSubsetN) {
    throw ConfigError("subset enumeration is capped at n <= 20");
  }
  const Eigen::MatrixXd& m = sigma.entries();
  const std::uint32_t total = 1u << n;
  // quad[mask] = 1_U^T Sigma 1_U, built incrementally from mask minus its
  // lowest set bit.
  std::vector<double> quad(total, 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    const int i = std::countr_zero(mask);
    const std::uint32_t rest = mask & (mask - 1);
    double cross = 0.0;
    for (std::uint32_t bits = rest; bits != 0; bits &= bits - 1) {
      cross += m(i, std::countr_zero(bits));
    }
    quad[mask] = quad[rest] + m(i, i) + 2.0 * cross;
    const int size = std::popcount(mask);
    if (size >= t) {
      const double mse = d * quad[mask] / (static_cast<double>(size) * size);
      worst = std::max(worst, mse);
    }
  }
  return worst;
}

PrivacyCheckResult privacy_check_inverse_diag(const CovarianceMatrix& sigma,
                                              double sigma2_eps_delta) {
  if (!(sigma2_eps_delta > 0.0)) {
    throw ConfigError("sigma2_eps_delta must be positive");
  }
  const Eigen::MatrixXd inv = spd_inverse(sigma.entries());
  PrivacyCheckResult result;
  result.ok = true;
  result.margins.resize(sigma.n());
  // Tight optima sit exactly on the boundary; allow rounding-level slack so
  // they report as feasible with (approximately) zero margin.
  const double slack = 1e-9 / sigma2_eps_delta;
  for (int i = 0; i < sigma.n(); ++i) {
    result.margins[i] = 1.0 / sigma2_eps_delta - inv(i, i);
    if (result.margins[i] < -slack) result.ok = false;
  }
  return result;
}

CovarianceMatrix permutation_average(const CovarianceMatrix& sigma) {
  const int n = sigma.n();
  const Eigen::MatrixXd& m = sigma.entries();
  const double diag_mean = m.diagonal().mean();
  double off_mean = 0.0;
  if (n > 1) {
    off_mean = (m.sum() - m.diagonal().sum()) / (static_cast<double>(n) * (n - 1));
  }
  return CovarianceMatrix::exchangeable(n, diag_mean, off_mean);
}

ConverseTrialReport converse_property_trial(int n, int t, int d,
                                            const PrivacyBudget& budget,
                                            const Seed256& seed) {
  if (n > 8) throw ConfigError("converse trials are capped at n <= 8");
  if (t < 1 || t > n) throw ConfigError("t must satisfy 1 <= t <= n");
  const double s2ed = sigma_eps_delta(budget).sigma2_eps_delta;

  SequentialRng rng(seed, kStreamProtocolAux);
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    }
    Eigen::MatrixXd a =
        g * g.transpose() + 1e-3 * Eigen::MatrixXd::Identity(n, n);
    // Scaling Sigma by s divides every diagonal entry of the inverse by s,
    // so the smallest factor passing the check is s2ed * max_i inv_ii.
    Eigen::MatrixXd inv;
    try {
      inv = spd_inverse(a);
    } catch (const ConditioningError&) {
      continue;
    }
    const double scale = s2ed * inv.diagonal().maxCoeff() * (1.0 + 1e-9);
    if (!(scale > 0.0) || !std::isfinite(scale)) continue;

    ConverseTrialReport report;
    report.sigma = scale * a;
    const CovarianceMatrix original(report.sigma);
    const CovarianceMatrix averaged = permutation_average(original);
    report.original_feasible =
        privacy_check_inverse_diag(original, s2ed).ok;
    if (!report.original_feasible) continue;
    report.averaged_feasible = privacy_check_inverse_diag(averaged, s2ed).ok;
    report.mse_original = unbiased_mse_of_sigma(original, t, d);
    report.mse_averaged = unbiased_mse_of_sigma(averaged, t, d);
    report.property_holds =
        report.mse_averaged <=
        report.mse_original * (1.0 + kPropertyTol) + kPropertyTol;
    return report;
  }
  throw std::runtime_error("rejection-sampling budget exhausted");
}

void dump_converse_reports_csv(
    std::ostream& os, const std::vector<ConverseTrialReport>& reports) {
  os << "n,mse_original,mse_averaged,property_holds,sigma_upper_triangle\n";
  for (const auto& r : reports) {
    const int n = static_cast<int>(r.sigma.rows());
    os << n << ',' << r.mse_original << ',' << r.mse_averaged << ','
       << (r.property_holds ? 1 : 0) << ',';
    bool first = true;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        if (!first) os << ';';
        os << r.sigma(i, j);
        first = false;
      }
    }
    os << '\n';
  }
}

}  // namespace cordp
