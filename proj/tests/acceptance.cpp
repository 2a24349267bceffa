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
// Acceptance suite: every release gate runs here, one pass/fail line per
// criterion, with all tolerances pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cordp/calibration.hpp"
#include "cordp/correlated_noise.hpp"
#include "cordp/covariance_lab.hpp"
#include "cordp/experiment.hpp"
#include "cordp/optimizer.hpp"
#include "cordp/secagg_toy.hpp"
#include "cordp/simulator.hpp"

namespace cordp {
namespace {

struct Checker {
  std::ostringstream log;
  bool ok = true;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      log << "    FAILED: " << what << "\n";
    }
  }
  void within(double actual, double expected, double rel_tol,
              const std::string& what) {
    const double tol = std::abs(expected) * rel_tol;
    if (!(std::abs(actual - expected) <= tol)) {
      ok = false;
      log << "    FAILED: " << what << ": " << actual << " vs " << expected
          << " (rel tol " << rel_tol << ")\n";
    }
  }
};

const PrivacyBudget kBudget{2.0, 1e-5};
constexpr int kDim = 5;

// ---------------------------------------------------------------------------
// 1. Analytic reproduction of the published optimal-parameter table.
void criterion_table(Checker& c) {
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  struct Row {
    int t, c;
    bool ldp;
    double sigma2, rho, biased, unbiased;
  };
  const double kInf = std::numeric_limits<double>::infinity();
  const Row rows[] = {
      {10, 0, false, kInf, -0.111, 0.166, 0.199},
      {10, 2, false, kInf, -0.111, 0.199, 0.248},
      {8, 0, false, 5.466, -0.091, 0.554, 1.242},
      {8, 2, false, 6.318, -0.089, 0.598, 1.488},
      {10, 0, true, 3.975, 0.0, 0.665, 1.988},
  };
  for (const Row& row : rows) {
    const SystemConfig cfg(10, row.t, row.c, kDim);
    const NoiseParams params =
        row.ldp ? NoiseParams::finite(s2ed, 0.0) : optimal_params(cfg, s2ed);
    if (std::isinf(row.sigma2)) {
      c.require(params.limit_mode, "limit mode expected at t = n");
    } else {
      c.within(params.sigma2, row.sigma2, 0.005, "sigma2*");
    }
    if (row.rho == 0.0) {
      c.require(params.rho == 0.0, "ldp rho must be exactly 0");
    } else {
      c.within(params.rho, row.rho, 0.005, "rho*");
    }
    c.within(analytic_mse(row.t, kDim, params, EstimatorKind::kBiasedOptimal),
             row.biased, 0.005, "biased mse");
    c.within(analytic_mse(row.t, kDim, params, EstimatorKind::kUnbiased),
             row.unbiased, 0.005, "unbiased mse");
  }
}

// ---------------------------------------------------------------------------
// 2. Calibration anchor and its closed-form bound.
void criterion_calibration(Checker& c) {
  const CalibratedVariance cal = sigma_eps_delta(kBudget);
  c.require(std::abs(cal.sigma2_eps_delta - 3.975) <= 0.005,
            "sigma2(2, 1e-5) must be 3.975 +- 0.005");
  c.require(cal.achieved_gap <= 1e-5, "achieved gap must not exceed delta");
  c.require(cal.sigma2_eps_delta <= sigma_upper_bound(kBudget),
            "calibrated variance must respect the closed-form bound");
}

// ---------------------------------------------------------------------------
// 3. Brute-force grid oracle agrees with the closed form.
void criterion_grid_oracle(Checker& c) {
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  const SystemConfig configs[] = {
      {5, 4, 0, kDim}, {10, 8, 0, kDim}, {10, 8, 2, kDim}, {20, 15, 3, kDim}};
  for (const SystemConfig& cfg : configs) {
    GridSpec grid;  // 400 x 400, cap 20 * sigma2_eps_delta
    const GridResult oracle =
        grid_oracle(cfg, kBudget, EstimatorKind::kBiasedOptimal, grid);
    const NoiseParams closed = optimal_params(cfg, s2ed);
    std::ostringstream tag;
    tag << "(n=" << cfg.n << ",t=" << cfg.t << ",c=" << cfg.c << ")";
    c.require(std::abs(oracle.params.sigma2 - closed.sigma2) <=
                  oracle.sigma2_cell + 1e-12,
              "sigma2 within one grid cell " + tag.str());
    const double slice_best =
        optimal_r_at(cfg.n, cfg.c, oracle.params.sigma2, s2ed) /
        oracle.params.sigma2;
    c.require(std::abs(oracle.params.rho - slice_best) <=
                  oracle.r_cell / oracle.params.sigma2 + 1e-9,
              "rho within one grid cell " + tag.str());
    for (const auto kind :
         {EstimatorKind::kBiasedOptimal, EstimatorKind::kUnbiased}) {
      const double closed_mse = worst_case_mse(cfg, closed, kind);
      const double oracle_mse = worst_case_mse(cfg, oracle.params, kind);
      c.require(closed_mse <= oracle_mse + 1e-6,
                "closed-form mse must not exceed the oracle " + tag.str());
    }
  }
}

// ---------------------------------------------------------------------------
// 4. The privacy constraint is active at every finite optimum.
void criterion_tightness(Checker& c) {
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  const SystemConfig configs[] = {
      {5, 4, 0, kDim}, {10, 8, 0, kDim}, {10, 8, 2, kDim}, {20, 15, 3, kDim}};
  for (const SystemConfig& cfg : configs) {
    const NoiseParams params = optimal_params(cfg, s2ed);
    const double margin =
        privacy_margin(cfg.n, cfg.c, params.sigma2, params.r(), s2ed);
    c.require(std::abs(margin) / s2ed <= 1e-6,
              "constraint must be tight at the optimum (n=" +
                  std::to_string(cfg.n) + ",c=" + std::to_string(cfg.c) + ")");
    if (cfg.c == 0) {
      const auto check = privacy_check_inverse_diag(
          CovarianceMatrix::exchangeable(cfg.n, params.sigma2, params.r()),
          s2ed);
      double min_margin = check.margins[0];
      for (double m : check.margins) min_margin = std::min(min_margin, m);
      c.require(std::abs(min_margin) * s2ed <= 1e-6,
                "inverse-diagonal check must agree at c = 0");
    }
  }
}

// ---------------------------------------------------------------------------
// 5. Monte-Carlo estimates match the analytic values within 3 sigma.
void criterion_monte_carlo(Checker& c) {
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  const int trials = 10000;
  struct Case {
    Mechanism mech;
    int t, col;
    EstimatorKind kind;
  };
  std::vector<Case> cases;
  for (const auto kind :
       {EstimatorKind::kBiasedOptimal, EstimatorKind::kUnbiased}) {
    cases.push_back({Mechanism::kCorDp, 10, 0, kind});
    cases.push_back({Mechanism::kCorDp, 10, 2, kind});
    cases.push_back({Mechanism::kCorDp, 8, 0, kind});
    cases.push_back({Mechanism::kCorDp, 8, 2, kind});
    cases.push_back({Mechanism::kLdp, 10, 0, kind});
  }
  cases.push_back({Mechanism::kCdp, 10, 0, EstimatorKind::kUnbiased});
  for (const Case& item : cases) {
    const SystemConfig cfg(10, item.t, item.col, kDim);
    TrialSpec spec(cfg, kBudget);
    spec.mechanism = item.mech;
    spec.estimator = item.kind;
    spec.input_mode = InputMode::kWorstCaseEqualSphere;
    spec.responding_mode = RespondingMode::kExactT;
    spec.master_seed = seed_from_u64(0xACCE57);
    for (int i = 0; i < cfg.c; ++i) spec.colluding_set.push_back(i);

    double analytic = 0.0;
    switch (item.mech) {
      case Mechanism::kCorDp:
        analytic = analytic_mse(item.t, kDim, optimal_params(cfg, s2ed),
                                item.kind);
        break;
      case Mechanism::kLdp:
        analytic = analytic_mse(item.t, kDim, NoiseParams::finite(s2ed, 0.0),
                                item.kind);
        break;
      default:
        analytic = kDim * s2ed / (static_cast<double>(item.t) * item.t);
        break;
    }
    const ExperimentSummary summary = run_experiment(spec, trials);
    std::ostringstream tag;
    tag << mechanism_name(item.mech) << " t=" << item.t << " c=" << item.col
        << (item.kind == EstimatorKind::kUnbiased ? " unbiased" : " biased");
    c.require(std::abs(summary.mean_mse - analytic) <= 3.0 * summary.std_error,
              "empirical vs analytic " + tag.str() + ": " +
                  std::to_string(summary.mean_mse) + " vs " +
                  std::to_string(analytic));
  }
}

// ---------------------------------------------------------------------------
// 6. The analytic utility curve sits between the two baselines.
void criterion_curve_shape(Checker& c) {
  const int n = 100, d = 20;
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  double cordp1 = 0.0, ldp1 = 0.0, cdp1 = 0.0;
  for (int u = 1; u <= n; ++u) {
    const SystemConfig cfg(n, u, 0, d);
    const NoiseParams params = optimal_params(cfg, s2ed);
    const double cordp = analytic_mse(u, d, params, EstimatorKind::kUnbiased);
    const double ldp = analytic_mse(u, d, NoiseParams::finite(s2ed, 0.0),
                                    EstimatorKind::kUnbiased);
    const double cdp = d * s2ed / (static_cast<double>(u) * u);
    if (u == 1) {
      cordp1 = cordp;
      ldp1 = ldp;
      cdp1 = cdp;
    }
    c.require(cdp <= cordp * (1.0 + 1e-9), "cdp <= cordp at u=" + std::to_string(u));
    c.require(cordp <= ldp * (1.0 + 1e-9), "cordp <= ldp at u=" + std::to_string(u));
    if (u == n) {
      c.require(std::abs(cordp - cdp) <= 0.01 * cdp,
                "cordp and cdp must agree within 1% at u = n");
    }
  }
  c.require(std::abs(cordp1 - ldp1) <= 1e-9 * ldp1 &&
                std::abs(cdp1 - ldp1) <= 1e-9 * ldp1,
            "all three mechanisms must coincide at u = 1");
}

// ---------------------------------------------------------------------------
// 7. Generated noise shows the designed covariance structure.
void criterion_noise_covariance(Checker& c) {
  const int n = 10, d = kDim;
  const NoiseParams params = NoiseParams::finite(5.466, -0.0909);
  const int draws = 200000;
  const int workers =
      std::max(1u, std::thread::hardware_concurrency());
  std::vector<CovarianceAccumulator> parts(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      std::vector<double> joint(n * d);
      for (int trial = w; trial < draws; trial += workers) {
        const DealtSeeds dealt = deal_seeds(
            n, derive_seed(seed_from_u64(0xC0FFEE), kTagTrial, trial, 0));
        for (int i = 0; i < n; ++i) {
          const auto z = generate_user_noise(dealt.plan_for(i, params, d));
          for (int k = 0; k < d; ++k) joint[i * d + k] = z[k];
        }
        parts[w].add(joint, n, d);
      }
    });
  }
  for (auto& th : pool) th.join();
  CovarianceAccumulator acc;
  for (const auto& part : parts) acc.merge(part);
  const CovarianceEstimate est = acc.finalize();
  c.require(std::abs(est.variance - 5.466) <= 3.0 * est.variance_se,
            "per-coordinate variance within 3 SE of 5.466 (got " +
                std::to_string(est.variance) + ")");
  c.require(std::abs(est.covariance - (-0.497)) <= 3.0 * est.covariance_se,
            "pairwise covariance within 3 SE of -0.497 (got " +
                std::to_string(est.covariance) + ")");
  c.require(std::abs(est.cross_coordinate) <= 3.0 * est.cross_coordinate_se,
            "cross-coordinate covariance statistically zero (got " +
                std::to_string(est.cross_coordinate) + ")");
}

// ---------------------------------------------------------------------------
// 8. Permutation averaging never hurts and preserves privacy.
void criterion_converse(Checker& c) {
  int holds = 0, feasible = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const auto report = converse_property_trial(
        5, 3, 4, kBudget, derive_seed(seed_from_u64(0xC0), kTagTrial, trial, 0));
    holds += report.property_holds ? 1 : 0;
    feasible += report.averaged_feasible ? 1 : 0;
  }
  c.require(holds == trials, "averaged MSE must never exceed the original (" +
                                 std::to_string(holds) + "/500)");
  c.require(feasible == trials,
            "averaged matrix must stay feasible (" + std::to_string(feasible) +
                "/500)");
}

// ---------------------------------------------------------------------------
// 9. Secure-aggregation walkthrough: recovery, failure, and blinding.
void criterion_secagg(Checker& c) {
  const std::uint64_t q = kDefaultModulus;
  std::vector<FieldElement> inputs;
  for (std::uint64_t v : {7ull, 1000ull, 13ull, 29ull}) inputs.emplace_back(v, q);

  const auto two_wave = secagg_run(inputs, {{1}, {2}}, q, 2, seed_from_u64(1));
  c.require(!two_wave.failure && two_wave.recovered_sum.has_value(),
            "two-wave dropout run must succeed");
  if (two_wave.recovered_sum.has_value()) {
    c.require(two_wave.recovered_sum->value == (7 + 13 + 29),
              "recovered sum must equal the responders' exact sum");
  }
  const auto collapsed = secagg_run(inputs, {{0, 1, 2}}, q, 2, seed_from_u64(2));
  c.require(collapsed.failure, "below-threshold run must fail");
  c.require(!collapsed.log.empty(), "failure must still carry a round log");

  const std::uint64_t small_q = 101;
  const auto demo = delayed_response_demo(small_q, seed_from_u64(3));
  c.require(demo.unblinded_recovered_x2.value == demo.planted_x2.value,
            "unblinded delayed response must reveal the planted value");

  std::vector<int> counts(small_q, 0);
  const int runs = 10000;
  for (int run = 0; run < runs; ++run) {
    const auto r = delayed_response_demo(small_q, seed_from_u64(90000 + run));
    counts[r.blinded_residual.value] += 1;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(runs) / small_q;
  for (std::uint64_t v = 0; v < small_q; ++v) {
    const double diff = counts[v] - expected;
    chi2 += diff * diff / expected;
  }
  // p > 0.01 at 100 degrees of freedom.
  c.require(chi2 < 135.807,
            "blinded residual must pass the uniformity test (chi2 = " +
                std::to_string(chi2) + ")");
}

// ---------------------------------------------------------------------------
// 10. Special-case reductions.
void criterion_special_cases(Checker& c) {
  const double s2ed = sigma_eps_delta(kBudget).sigma2_eps_delta;
  std::uint64_t state = 0x5eed;
  auto unit = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };

  // Two-user feasibility is exactly sigma2 (1 - rho^2) >= sigma2_eps_delta.
  int agreements = 0;
  for (int i = 0; i < 1000; ++i) {
    const double sigma2 = s2ed * (0.8 + 2.0 * unit());
    const double rho = -1.0 + 2.0 * unit();
    const double margin_ok =
        privacy_margin(2, 0, sigma2, rho * sigma2, s2ed) >= 0.0;
    const double closed_ok = sigma2 * (1.0 - rho * rho) >= s2ed;
    agreements += margin_ok == closed_ok ? 1 : 0;
  }
  c.require(agreements == 1000,
            "n=2 feasibility must match the closed form (" +
                std::to_string(agreements) + "/1000)");

  // Full collusion collapses to the independent-noise point, exactly.
  for (int n : {2, 5, 12}) {
    const NoiseParams params =
        optimal_params(SystemConfig(n, n, n - 1, kDim), s2ed);
    c.require(!params.limit_mode && params.sigma2 == s2ed && params.rho == 0.0,
              "c = n-1 must return the exact independent-noise point");
  }

  // The optimal correlation is never positive.
  int non_positive = 0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(unit() * 30);
    const int t = 1 + static_cast<int>(unit() * n);
    const int col = static_cast<int>(unit() * t);
    const NoiseParams params =
        optimal_params(SystemConfig(n, std::min(t, n), col, kDim), s2ed);
    non_positive += params.rho <= 1e-12 ? 1 : 0;
  }
  c.require(non_positive == 200, "rho* must be <= 0 in all sampled configs (" +
                                     std::to_string(non_positive) + "/200)");
}

int run_all() {
  struct Criterion {
    const char* description;
    std::function<void(Checker&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {"analytic reproduction of the published parameter table",
       criterion_table},
      {"calibration anchor 3.975 +- 0.005 and closed-form bound",
       criterion_calibration},
      {"grid oracle within one cell of the closed form", criterion_grid_oracle},
      {"privacy constraint tight at every finite optimum", criterion_tightness},
      {"Monte-Carlo MSE within 3 SE of analytic for all mechanisms",
       criterion_monte_carlo},
      {"utility curve ordered cdp <= cordp <= ldp with matching endpoints",
       criterion_curve_shape},
      {"generated noise covariance matches (5.466, -0.497)",
       criterion_noise_covariance},
      {"permutation averaging: 500/500 trials hold and stay feasible",
       criterion_converse},
      {"secure-aggregation recovery, threshold failure, and blinding",
       criterion_secagg},
      {"special-case reductions (n=2, c=n-1, rho* <= 0)",
       criterion_special_cases},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Checker checker;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].fn(checker);
    } catch (const std::exception& e) {
      checker.ok = false;
      checker.log << "    EXCEPTION: " << e.what() << "\n";
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %zu: %s (%.2fs)\n",
                checker.ok ? "PASS" : "FAIL", i + 1, criteria[i].description,
                seconds);
    if (!checker.ok) {
      std::fputs(checker.log.str().c_str(), stdout);
      ++failures;
    }
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}

}  // namespace
}  // namespace cordp

int main() { return cordp::run_all(); }
