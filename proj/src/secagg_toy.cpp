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

namespace cordp {
namespace {

void check_same_field(const FieldElement& a, const FieldElement& b) {
  if (a.q != b.q) throw ConfigError("field moduli differ");
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t q) {
  unsigned __int128 acc = 1;
  unsigned __int128 b = base % q;
  while (exp > 0) {
    if (exp & 1) acc = acc * b % q;
    b = b * b % q;
    exp >>= 1;
  }
  return static_cast<std::uint64_t>(acc);
}

std::string pad_label(int i, int j) {
  return "S_" + std::to_string(std::min(i, j)) + "_" +
         std::to_string(std::max(i, j));
}

std::string blind_label(int i) { return "b_" + std::to_string(i); }

}  // namespace

FieldElement::FieldElement(std::uint64_t v, std::uint64_t modulus)
    : value(v), q(modulus) {
  if (q < 2) throw ConfigError("modulus must be >= 2");
  if (v >= q) throw ConfigError("field value out of range");
}

FieldElement field_add(FieldElement a, FieldElement b) {
  check_same_field(a, b);
  const std::uint64_t s = a.value + b.value;
  return FieldElement(s >= a.q ? s - a.q : s, a.q);
}

FieldElement field_sub(FieldElement a, FieldElement b) {
  check_same_field(a, b);
  return FieldElement(a.value >= b.value ? a.value - b.value
                                         : a.value + a.q - b.value,
                      a.q);
}

FieldElement field_mul(FieldElement a, FieldElement b) {
  check_same_field(a, b);
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a.value) * b.value;
  return FieldElement(static_cast<std::uint64_t>(p % a.q), a.q);
}

FieldElement field_inv(FieldElement a) {
  if (a.value == 0) throw std::domain_error("zero has no inverse");
  return FieldElement(pow_mod(a.value, a.q - 2, a.q), a.q);
}

std::vector<ShamirShare> shamir_share(const FieldElement& secret, int t, int n,
                                      SequentialRng& rng, int secret_owner,
                                      const std::string& label) {
  if (t < 1 || t > n) throw ConfigError("need 1 <= t <= n");
  if (static_cast<std::uint64_t>(n) >= secret.q) {
    throw ConfigError("field too small for n distinct evaluation points");
  }
  const std::uint64_t q = secret.q;
  std::vector<std::uint64_t> coeffs(t);
  coeffs[0] = secret.value;
  for (int k = 1; k < t; ++k) coeffs[k] = rng.below(q);

  std::vector<ShamirShare> shares;
  shares.reserve(n);
  for (int h = 0; h < n; ++h) {
    const std::uint64_t x = static_cast<std::uint64_t>(h) + 1;
    // Horner evaluation of the degree t-1 polynomial at x.
    unsigned __int128 y = 0;
    for (int k = t - 1; k >= 0; --k) {
      y = (y * x + coeffs[k]) % q;
    }
    shares.push_back(ShamirShare{h, FieldElement(x, q),
                                 FieldElement(static_cast<std::uint64_t>(y), q),
                                 t, secret_owner, label});
  }
  return shares;
}

FieldElement shamir_reconstruct(const std::vector<ShamirShare>& shares) {
  if (shares.empty()) throw InsufficientSharesError("no shares given");
  const int t = shares.front().threshold;
  if (static_cast<int>(shares.size()) < t) {
    throw InsufficientSharesError("fewer shares than the threshold");
  }
  std::set<std::uint64_t> points;
  for (const auto& s : shares) {
    if (s.secret_owner != shares.front().secret_owner ||
        s.secret_label != shares.front().secret_label) {
      throw ConfigError("shares of different secrets were mixed");
    }
    if (s.evaluation_point.value == 0) {
      throw ConfigError("evaluation points must be nonzero");
    }
    if (!points.insert(s.evaluation_point.value).second) {
      throw ConfigError("duplicate evaluation points");
    }
  }
  // Lagrange interpolation at 0 over the first t shares.
  const std::uint64_t q = shares.front().value.q;
  FieldElement acc(0, q);
  for (int a = 0; a < t; ++a) {
    FieldElement weight(1, q);
    const FieldElement xa = shares[a].evaluation_point;
    for (int b = 0; b < t; ++b) {
      if (b == a) continue;
      const FieldElement xb = shares[b].evaluation_point;
      weight = field_mul(weight,
                         field_mul(xb, field_inv(field_sub(xb, xa))));
    }
    acc = field_add(acc, field_mul(shares[a].value, weight));
  }
  return acc;
}

std::string SecAggTranscript::to_jsonl() const {
  std::ostringstream os;
  for (const auto& m : log) {
    os << "{\"round\":" << m.round << ",\"from\":" << m.sender
       << ",\"to\":" << m.receiver << ",\"bytes\":" << m.bytes
       << ",\"label\":\"" << m.label << "\"}\n";
  }
  return os.str();
}

int SecAggTranscript::messages_in_round(int round) const {
  int count = 0;
  for (const auto& m : log) count += m.round == round ? 1 : 0;
  return count;
}

SecAggTranscript secagg_run(const std::vector<FieldElement>& inputs,
                            const std::vector<std::vector<int>>& dropout_schedule,
                            std::uint64_t q, int t, const Seed256& seed) {
  const int n = static_cast<int>(inputs.size());
  if (n < 2) throw ConfigError("need at least 2 users");
  if (t < 1 || t > n) throw ConfigError("need 1 <= t <= n");
  for (const auto& x : inputs) {
    if (x.q != q) throw ConfigError("input outside the requested field");
  }
  std::set<int> seen;
  for (const auto& wave : dropout_schedule) {
    for (int u : wave) {
      if (u < 0 || u >= n) throw ConfigError("dropout user out of range");
      if (!seen.insert(u).second) throw ConfigError("user drops twice");
    }
  }

  SecAggTranscript tr;
  SequentialRng rng(seed, kStreamProtocolAux);
  auto wave = [&](int k) -> std::vector<int> {
    return k < static_cast<int>(dropout_schedule.size()) ? dropout_schedule[k]
                                                         : std::vector<int>{};
  };
  auto fail = [&](int rounds) {
    tr.failure = true;
    tr.rounds_used = rounds;
    return tr;
  };

  // ---- Offline setup (round 0): pads, blinds, and their Shamir shares. ----
  std::map<std::pair<int, int>, FieldElement> pads;  // key (i, j), i < j
  std::map<std::string, std::vector<ShamirShare>> shares;
  std::vector<FieldElement> blind;
  blind.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const FieldElement pad(rng.below(q), q);
      pads.emplace(std::make_pair(i, j), pad);
      shares[pad_label(i, j)] = shamir_share(pad, t, n, rng, i, pad_label(i, j));
      tr.log.push_back({0, i, j, 8, "pad_agree"});
    }
    blind.emplace_back(rng.below(q), q);
    shares[blind_label(i)] = shamir_share(blind[i], t, n, rng, i, blind_label(i));
  }
  for (const auto& [label, share_set] : shares) {
    for (const auto& s : share_set) {
      if (s.holder != s.secret_owner) {
        tr.log.push_back({0, s.secret_owner, s.holder, 16, "share:" + label});
      }
    }
  }
  auto pad_of = [&](int a, int b) {
    return pads.at(std::make_pair(std::min(a, b), std::max(a, b)));
  };

  // ---- Round 1: masked uploads from users that did not drop up front. ----
  std::vector<int> alive;
  {
    const auto& w0 = wave(0);
    for (int u = 0; u < n; ++u) {
      if (std::find(w0.begin(), w0.end(), u) == w0.end()) alive.push_back(u);
    }
  }
  const std::vector<int> responders = alive;
  if (static_cast<int>(responders.size()) < t) return fail(1);

  FieldElement masked_sum(0, q);
  tr.uploads.assign(n, std::nullopt);
  for (int u : responders) {
    FieldElement y = inputs[u];
    for (int j = 0; j < n; ++j) {
      if (j == u) continue;
      y = j > u ? field_add(y, pad_of(u, j)) : field_sub(y, pad_of(u, j));
    }
    y = field_add(y, blind[u]);
    tr.uploads[u] = y;
    masked_sum = field_add(masked_sum, y);
    tr.log.push_back({1, u, kServer, 8, "upload"});
  }
  tr.rounds_used = 1;
  tr.responding = responders;
  std::vector<int> dropped = wave(0);

  // ---- Round 2: dropout broadcast; direct pad and blind disclosures. ----
  std::vector<int> helpers;
  {
    const auto& w1 = wave(1);
    for (int u : alive) {
      if (std::find(w1.begin(), w1.end(), u) == w1.end()) helpers.push_back(u);
    }
  }
  if (static_cast<int>(helpers.size()) < t) return fail(2);
  for (int u : helpers) {
    tr.log.push_back({2, kServer, u, 4 * static_cast<std::size_t>(
                                            std::max<size_t>(1, dropped.size())),
                      "dropout_list"});
  }

  FieldElement pad_correction(0, q);
  FieldElement blind_sum(0, q);
  std::vector<std::string> missing;  // secrets needing share reconstruction

  auto correction_sign_is_plus = [](int v, int j) { return v < j; };

  for (int u : responders) {
    const bool helping =
        std::find(helpers.begin(), helpers.end(), u) != helpers.end();
    if (helping) {
      blind_sum = field_add(blind_sum, blind[u]);
      tr.log.push_back({2, u, kServer, 8, "blind:" + blind_label(u)});
    } else {
      missing.push_back(blind_label(u));
    }
  }
  for (int v : dropped) {
    for (int j : responders) {
      const FieldElement pad = pad_of(v, j);
      const bool helping =
          std::find(helpers.begin(), helpers.end(), j) != helpers.end();
      if (helping) {
        pad_correction = correction_sign_is_plus(v, j)
                             ? field_add(pad_correction, pad)
                             : field_sub(pad_correction, pad);
        tr.log.push_back({2, j, kServer, 8, "pad:" + pad_label(v, j)});
      } else {
        missing.push_back(pad_label(v, j));
      }
    }
  }
  tr.rounds_used = 2;

  // ---- Round 3: share reconstruction for whatever round 2 left behind. ----
  if (!missing.empty()) {
    std::vector<int> final_helpers;
    {
      const auto& w2 = wave(2);
      for (int u : helpers) {
        if (std::find(w2.begin(), w2.end(), u) == w2.end()) {
          final_helpers.push_back(u);
        }
      }
    }
    if (static_cast<int>(final_helpers.size()) < t) return fail(3);
    for (const std::string& label : missing) {
      std::vector<ShamirShare> collected;
      for (int h : final_helpers) {
        collected.push_back(shares.at(label)[h]);
        tr.log.push_back({3, h, kServer, 16, "share:" + label});
      }
      const FieldElement secret = shamir_reconstruct(collected);
      if (label[0] == 'b') {
        blind_sum = field_add(blind_sum, secret);
      } else {
        // Label S_a_b with a < b; recover which responder j it touches.
        const auto us = label.find('_');
        const auto vs = label.find('_', us + 1);
        const int a = std::stoi(label.substr(us + 1, vs - us - 1));
        const int b = std::stoi(label.substr(vs + 1));
        const int v = std::find(dropped.begin(), dropped.end(), a) !=
                              dropped.end()
                          ? a
                          : b;
        const int j = v == a ? b : a;
        pad_correction = correction_sign_is_plus(v, j)
                             ? field_add(pad_correction, secret)
                             : field_sub(pad_correction, secret);
      }
    }
    tr.rounds_used = 3;
  }

  tr.recovered_sum =
      field_add(field_sub(masked_sum, blind_sum), pad_correction);
  return tr;
}

DelayedResponseReport delayed_response_demo(
    std::uint64_t q, const Seed256& seed,
    std::optional<std::uint64_t> forced_b2) {
  constexpr int kUsers = 4;
  SequentialRng rng(seed, kStreamProtocolAux);
  std::vector<FieldElement> x;
  for (int i = 0; i < kUsers; ++i) x.emplace_back(rng.below(q), q);
  std::map<std::pair<int, int>, FieldElement> pads;
  for (int i = 0; i < kUsers; ++i) {
    for (int j = i + 1; j < kUsers; ++j) {
      pads.emplace(std::make_pair(i, j), FieldElement(rng.below(q), q));
    }
  }
  const FieldElement b2(forced_b2 ? *forced_b2 % q : rng.below(q), q);

  // User 2 (index 1) is treated as dropped; the server completes recovery
  // and learns every pad touching it.
  auto pad_of = [&](int a, int b) {
    return pads.at(std::make_pair(std::min(a, b), std::max(a, b)));
  };
  const FieldElement a01 = pad_of(0, 1);
  const FieldElement d12 = pad_of(1, 2);
  const FieldElement f13 = pad_of(1, 3);

  // Delayed upload of user 2 without blinding:
  //   y = x2 - S01 + S12 + S13 (smaller index subtracts, larger adds).
  FieldElement y = field_sub(x[1], a01);
  y = field_add(y, d12);
  y = field_add(y, f13);
  // Server knows the pads, so it strips them exactly.
  FieldElement unblinded = field_add(y, a01);
  unblinded = field_sub(unblinded, d12);
  unblinded = field_sub(unblinded, f13);

  // Same delayed upload with the blinding value added.
  FieldElement yb = field_add(y, b2);
  FieldElement residual = field_add(yb, a01);
  residual = field_sub(residual, d12);
  residual = field_sub(residual, f13);  // = x2 + b2

  return DelayedResponseReport{x[1], unblinded, residual, b2};
}

}  // namespace cordp
