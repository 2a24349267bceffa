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

#include "cordp/secagg_toy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"

namespace cordp {
namespace {

std::vector<FieldElement> make_inputs(const std::vector<std::uint64_t>& values,
                                      std::uint64_t q) {
  std::vector<FieldElement> out;
  for (auto v : values) out.emplace_back(v % q, q);
  return out;
}

std::uint64_t plain_sum(const std::vector<FieldElement>& inputs,
                        const std::vector<int>& users) {
  std::uint64_t sum = 0;
  for (int u : users) sum = (sum + inputs[u].value) % inputs[u].q;
  return sum;
}

TEST_CASE("field arithmetic and inverses") {
  const FieldElement a(5, 7), b(4, 7);
  CHECK(field_add(a, b).value == 2);
  CHECK(field_sub(b, a).value == 6);
  CHECK(field_mul(a, b).value == 6);
  CHECK(field_mul(a, field_inv(a)).value == 1);
  CHECK_THROWS_AS(field_inv(FieldElement(0, 7)), std::domain_error);
  CHECK_THROWS_AS(field_add(a, FieldElement(1, 11)), ConfigError);
  CHECK_THROWS_AS(FieldElement(7, 7), ConfigError);
}

TEST_CASE("threshold-1 shares are the secret itself") {
  SequentialRng rng(seed_from_u64(3), kStreamProtocolAux);
  const auto shares = shamir_share(FieldElement(42, 101), 1, 4, rng, 0, "x");
  for (const auto& s : shares) CHECK(s.value.value == 42);
}

TEST_CASE("all threshold-size subsets reconstruct; smaller ones reveal nothing") {
  SequentialRng rng(seed_from_u64(9), kStreamProtocolAux);
  const std::uint64_t q = 101;
  const auto shares = shamir_share(FieldElement(42, q), 3, 5, rng, 1, "s");

  // Every 3-subset of the 5 shares reconstructs 42.
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      for (int c = b + 1; c < 5; ++c) {
        CHECK(shamir_reconstruct({shares[a], shares[b], shares[c]}).value == 42);
      }
    }
  }

  // Exhaustive check at tiny q: any 2 shares are consistent with every
  // possible secret (there is a degree-2 polynomial through any 2 points
  // and any constant term).
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      std::set<std::uint64_t> consistent;
      for (std::uint64_t secret = 0; secret < q; ++secret) {
        for (std::uint64_t c1 = 0; c1 < q; ++c1) {
          // Degree-2 polynomial secret + c1 x + c2 x^2; solve c2 from the
          // first share, then test the second.
          const std::uint64_t xa = shares[a].evaluation_point.value;
          const std::uint64_t xb = shares[b].evaluation_point.value;
          const FieldElement xa2(xa * xa % q, q);
          const FieldElement xb2(xb * xb % q, q);
          const FieldElement target = field_sub(
              shares[a].value,
              field_add(FieldElement(secret, q),
                        field_mul(FieldElement(c1, q), FieldElement(xa, q))));
          const FieldElement c2 = field_mul(target, field_inv(xa2));
          const FieldElement predicted = field_add(
              FieldElement(secret, q),
              field_add(field_mul(FieldElement(c1, q), FieldElement(xb, q)),
                        field_mul(c2, xb2)));
          if (predicted.value == shares[b].value.value) {
            consistent.insert(secret);
            break;
          }
        }
      }
      CHECK(consistent.size() == q);
    }
  }
}

TEST_CASE("round trips, duplicates, and over-determined consistency") {
  SequentialRng rng(seed_from_u64(77), kStreamProtocolAux);
  const std::uint64_t q = kDefaultModulus;
  for (int i = 0; i < 100; ++i) {
    const FieldElement secret(rng.below(q), q);
    auto shares = shamir_share(secret, 3, 6, rng, 0, "r");
    CHECK(shamir_reconstruct({shares[0], shares[2], shares[5]}).value ==
          secret.value);
    // t shares and t+1 shares give the same answer.
    CHECK(shamir_reconstruct({shares[1], shares[2], shares[3], shares[4]})
              .value == secret.value);
  }
  auto shares = shamir_share(FieldElement(9, q), 2, 3, rng, 0, "r");
  CHECK_THROWS_AS(shamir_reconstruct({shares[0]}), InsufficientSharesError);
  CHECK_THROWS_AS(shamir_reconstruct({shares[0], shares[0]}), ConfigError);
  auto other = shamir_share(FieldElement(9, q), 2, 3, rng, 0, "different");
  CHECK_THROWS_AS(shamir_reconstruct({shares[0], other[1]}), ConfigError);
  CHECK_THROWS_AS(
      shamir_share(FieldElement(1, 5), 2, 5, rng, 0, "overflow"),
      ConfigError);
}

TEST_CASE("no dropouts: exact sum in two online rounds") {
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({11, 22, 33, 44}, q);
  const auto tr = secagg_run(inputs, {}, q, 2, seed_from_u64(1));
  REQUIRE_FALSE(tr.failure);
  CHECK(tr.recovered_sum->value == 110);
  CHECK(tr.rounds_used == 2);
  CHECK(tr.responding == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("single upfront dropout recovers the remaining sum") {
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({11, 22, 33, 44}, q);
  const auto tr = secagg_run(inputs, {{1}}, q, 2, seed_from_u64(2));
  REQUIRE_FALSE(tr.failure);
  CHECK(tr.recovered_sum->value == plain_sum(inputs, {0, 2, 3}));
  CHECK(tr.rounds_used == 2);
}

TEST_CASE("two-wave dropout needs a share-reconstruction round") {
  // User 2 never uploads; user 3 uploads but disappears before helping.
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({7, 1000, 13, 29}, q);
  const auto tr = secagg_run(inputs, {{1}, {2}}, q, 2, seed_from_u64(3));
  REQUIRE_FALSE(tr.failure);
  CHECK(tr.recovered_sum->value == plain_sum(inputs, {0, 2, 3}));
  CHECK(tr.rounds_used == 3);
  CHECK(tr.messages_in_round(3) > 0);
}

TEST_CASE("dropping below the threshold fails with a log") {
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({1, 2, 3, 4}, q);
  // n - t + 1 = 3 upfront dropouts leave too few users.
  const auto upfront = secagg_run(inputs, {{0, 1, 2}}, q, 2, seed_from_u64(4));
  CHECK(upfront.failure);
  CHECK_FALSE(upfront.recovered_sum.has_value());
  CHECK_FALSE(upfront.log.empty());
  // Losing helpers mid-recovery also fails.
  const auto later = secagg_run(inputs, {{0}, {1, 2}}, q, 2, seed_from_u64(5));
  CHECK(later.failure);
}

TEST_CASE("recovery traffic grows with the dropout count") {
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({5, 6, 7, 8, 9, 10}, q);
  int previous = -1;
  for (int dropouts = 0; dropouts <= 3; ++dropouts) {
    std::vector<int> wave;
    for (int u = 0; u < dropouts; ++u) wave.push_back(u);
    const auto tr = secagg_run(inputs, {wave}, q, 3, seed_from_u64(6));
    REQUIRE_FALSE(tr.failure);
    // Recovery traffic = pad disclosures and share uploads; the fixed
    // unmask traffic (blinds, broadcast) shrinks with the helper count.
    int recovery_messages = 0;
    for (const auto& m : tr.log) {
      if (m.round >= 2 && (m.label.rfind("pad:", 0) == 0 ||
                           m.label.rfind("share:", 0) == 0)) {
        ++recovery_messages;
      }
    }
    CHECK(recovery_messages > previous);
    previous = recovery_messages;
  }
}

TEST_CASE("a single masked upload is uniform at tiny q") {
  // One-time-pad argument, checked empirically: with fresh pads each run,
  // user 0's upload covers the field uniformly even though its input is
  // fixed.
  const std::uint64_t q = 101;
  std::vector<int> counts(q, 0);
  const int runs = 10100;
  for (int run = 0; run < runs; ++run) {
    const auto inputs = make_inputs({3, 1, 4, 1}, q);
    const auto tr = secagg_run(inputs, {}, q, 2, seed_from_u64(1000 + run));
    REQUIRE_FALSE(tr.failure);
    REQUIRE(tr.uploads[0].has_value());
    counts[tr.uploads[0]->value] += 1;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(runs) / q;
  for (std::uint64_t v = 0; v < q; ++v) {
    const double diff = counts[v] - expected;
    chi2 += diff * diff / expected;
  }
  const double df = q - 1.0;
  CHECK(chi2 < df + 3.7 * std::sqrt(2.0 * df));
}

TEST_CASE("transcript exports one json line per message") {
  const std::uint64_t q = kDefaultModulus;
  const auto inputs = make_inputs({11, 22, 33, 44}, q);
  const auto tr = secagg_run(inputs, {{1}}, q, 2, seed_from_u64(12));
  const std::string jsonl = tr.to_jsonl();
  const auto lines = static_cast<size_t>(
      std::count(jsonl.begin(), jsonl.end(), '\n'));
  CHECK(lines == tr.log.size());
  std::istringstream is(jsonl);
  std::string line;
  while (std::getline(is, line)) {
    CHECK(line.front() == '{');
    CHECK(line.back() == '}');
    CHECK(line.find("\"round\":") != std::string::npos);
    CHECK(line.find("\"bytes\":") != std::string::npos);
    CHECK(line.find("\"label\":\"") != std::string::npos);
  }
}

TEST_CASE("delayed response: blinding hides the late upload") {
  const std::uint64_t q = 101;
  // Unblinded recovery reveals the planted value exactly.
  const auto report = delayed_response_demo(q, seed_from_u64(7));
  CHECK(report.unblinded_recovered_x2.value == report.planted_x2.value);
  CHECK(report.blinded_residual.value ==
        field_add(report.planted_x2, report.b2).value);

  // Forcing b2 = 0 degenerates the blinded run to the unblinded one.
  const auto degenerate = delayed_response_demo(q, seed_from_u64(7), 0);
  CHECK(degenerate.blinded_residual.value ==
        degenerate.unblinded_recovered_x2.value);

  // Across fresh blinds the residual is uniform: chi-squared over 10^4
  // runs at q = 101 (100 degrees of freedom; 3.7 sigma threshold).
  std::vector<int> counts(q, 0);
  const int runs = 10000;
  for (int run = 0; run < runs; ++run) {
    const auto r = delayed_response_demo(q, seed_from_u64(50000 + run));
    counts[r.blinded_residual.value] += 1;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(runs) / q;
  for (std::uint64_t v = 0; v < q; ++v) {
    const double diff = counts[v] - expected;
    chi2 += diff * diff / expected;
  }
  const double df = q - 1.0;
  CHECK(chi2 < df + 3.7 * std::sqrt(2.0 * df));
}

}  // namespace
}  // namespace cordp
