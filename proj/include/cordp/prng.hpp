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
// Deterministic randomness for the noise protocol and the simulator.
//
// The generator contract is normative for the protocol: two parties holding
// the same 256-bit seed must reproduce identical 64-bit floats.  The stream
// is therefore pinned, not delegated to a library distribution:
//
//  * keystream: ChaCha20 block function (RFC 8439), 256-bit key, 96-bit
//    nonce, 32-bit block counter;
//  * draw i is the little-endian 64-bit word at slot (i mod 8) of block
//    (i div 8);
//  * uniform mapping: (x >> 11) * 2^-53 in [0, 1), and ((x >> 11) + 1) *
//    2^-53 in (0, 1] where a strictly positive value is needed;
//  * standard normal for coordinate k consumes draws [2k, 2k+1]:
//    z = sqrt(-2 ln u1) * cos(2 pi u2) with u1 in (0, 1].

#ifndef CORDP_PRNG_HPP_
#define CORDP_PRNG_HPP_

#include <array>
#include <cstdint>

namespace cordp {

using Seed256 = std::array<std::uint8_t, 32>;

// Domain-separation tags for derive_seed / stream nonces.
enum : std::uint32_t {
  kTagPairSeed = 1,
  kTagOwnSeed = 2,
  kTagTrial = 3,
  kStreamPairNoise = 1,
  kStreamOwnNoise = 2,
  kStreamInputs = 3,
  kStreamResponding = 4,
  kStreamServerNoise = 5,
  kStreamProtocolAux = 6,
};

// Counter-addressable stream of 64-bit draws keyed by a 256-bit seed.
// Random access by draw index; the most recent block is cached so
// sequential access costs one ChaCha20 block per 8 draws.
class ChaChaStream {
 public:
  ChaChaStream(const Seed256& key, std::uint32_t nonce0, std::uint32_t nonce1,
               std::uint32_t nonce2);

  std::uint64_t draw_u64(std::uint64_t index) const;
  double unit(std::uint64_t index) const;       // [0, 1)
  double unit_open(std::uint64_t index) const;  // (0, 1]
  // Standard normal for coordinate k (consumes draws 2k and 2k+1).
  double gaussian(std::uint64_t k) const;

 private:
  std::array<std::uint32_t, 12> key_and_nonce_;
  mutable std::uint64_t cached_block_ = ~0ull;
  mutable std::array<std::uint64_t, 8> cache_{};
};

// 32 bytes of keystream from (master, tag, a, b); used by the trusted dealer
// to derive pairwise and per-user seeds, and to key per-trial streams.
Seed256 derive_seed(const Seed256& master, std::uint32_t tag, std::uint32_t a,
                    std::uint32_t b);

// Convenience master seed from a 64-bit integer (CLI --seed).
Seed256 seed_from_u64(std::uint64_t value);

// Sequential helper over a ChaChaStream for simulator-side sampling
// (inputs, responding sets).  Not part of the protocol contract.
class SequentialRng {
 public:
  SequentialRng(const Seed256& key, std::uint32_t stream_id)
      : stream_(key, stream_id, 0, 0) {}

  std::uint64_t next_u64() { return stream_.draw_u64(next_++); }
  double unit() { return stream_.unit(next_++); }
  double gaussian();  // consumes two draws
  // Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

 private:
  ChaChaStream stream_;
  std::uint64_t next_ = 0;
};

}  // namespace cordp

#endif  // CORDP_PRNG_HPP_
