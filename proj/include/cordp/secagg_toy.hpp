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
// Reference secure-aggregation walkthrough over a prime field: pairwise
// one-time pads, Shamir-share dropout recovery, and per-user blinding values
// guarding against delayed responses.  Scalar inputs only; used for
// round-count and failure-mode comparison, not as a production protocol.

#ifndef CORDP_SECAGG_TOY_HPP_
#define CORDP_SECAGG_TOY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cordp/prng.hpp"
#include "cordp/types.hpp"

namespace cordp {

// Protocol state machine failed (as opposed to parameter misuse).
class InsufficientSharesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldElement {
  std::uint64_t value = 0;
  std::uint64_t q = 0;  // prime modulus

  FieldElement() = default;
  FieldElement(std::uint64_t v, std::uint64_t modulus);
};

FieldElement field_add(FieldElement a, FieldElement b);
FieldElement field_sub(FieldElement a, FieldElement b);
FieldElement field_mul(FieldElement a, FieldElement b);
FieldElement field_inv(FieldElement a);  // Fermat; q must be prime

constexpr std::uint64_t kDefaultModulus = 2147483647ull;  // 2^31 - 1

struct ShamirShare {
  int holder = 0;                 // user index holding the share
  FieldElement evaluation_point;  // nonzero
  FieldElement value;
  int threshold = 0;              // t of the (n, t) scheme
  int secret_owner = 0;
  std::string secret_label;       // e.g. "S_1_3" or "b_2"
};

// Degree t-1 polynomial with constant term = secret, evaluated at points
// 1..n.  Requires 1 <= t <= n < q.
std::vector<ShamirShare> shamir_share(const FieldElement& secret, int t, int n,
                                      SequentialRng& rng, int secret_owner,
                                      const std::string& label);

// Lagrange interpolation at 0.  Needs >= threshold shares with distinct
// evaluation points and a common (owner, label).
FieldElement shamir_reconstruct(const std::vector<ShamirShare>& shares);

struct TranscriptMessage {
  int round = 0;  // 0 = offline setup, 1 = uploads, 2+ = recovery waves
  int sender = 0;
  int receiver = 0;  // kServer for server
  std::size_t bytes = 0;
  std::string label;
};

inline constexpr int kServer = -1;

struct SecAggTranscript {
  std::vector<TranscriptMessage> log;
  std::optional<FieldElement> recovered_sum;  // empty on FAILURE
  bool failure = false;
  int rounds_used = 0;  // online rounds (setup round 0 excluded)
  std::vector<int> responding;  // users whose uploads entered the sum
  // Masked uploads by user index (responders only); inspectable because
  // this is a lab, not a production protocol.
  std::vector<std::optional<FieldElement>> uploads;

  std::string to_jsonl() const;  // one message per line
  int messages_in_round(int round) const;
};

// Runs the protocol for the given inputs.  dropout_schedule[k] lists the
// users dropping at online round k+1: wave 0 drops before uploading, later
// waves drop before answering that recovery round.  The server aborts with
// FAILURE (never an exception) once fewer than t users remain alive.
SecAggTranscript secagg_run(const std::vector<FieldElement>& inputs,
                            const std::vector<std::vector<int>>& dropout_schedule,
                            std::uint64_t q, int t, const Seed256& seed);

struct DelayedResponseReport {
  FieldElement planted_x2;
  FieldElement unblinded_recovered_x2;  // equals planted_x2
  FieldElement blinded_residual;        // x2 + b2
  FieldElement b2;
};

// The 4-user delayed-response scenario, run without and with blinding.
// Passing forced_b2 = 0 makes the blinded run degenerate to the unblinded
// one.
DelayedResponseReport delayed_response_demo(
    std::uint64_t q, const Seed256& seed,
    std::optional<std::uint64_t> forced_b2 = std::nullopt);

}  // namespace cordp

#endif  // CORDP_SECAGG_TOY_HPP_
