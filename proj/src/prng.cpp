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

#include "cordp/prng.hpp"

#include <cmath>
#include <stdexcept>

namespace cordp {
namespace {

constexpr double kTwoPi = 6.283185307179586;

inline std::uint32_t rotl32(std::uint32_t x, int k) {
  return (x << k) | (x >> (32 - k));
}

inline void quarter_round(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c,
                          std::uint32_t& d) {
  a += b; d ^= a; d = rotl32(d, 16);
  c += d; b ^= c; b = rotl32(b, 12);
  a += b; d ^= a; d = rotl32(d, 8);
  c += d; b ^= c; b = rotl32(b, 7);
}

// ChaCha20 block function per RFC 8439: 4 constant words, 8 key words,
// 1 counter word, 3 nonce words; 10 double rounds; add the initial state.
void chacha20_block(const std::array<std::uint32_t, 12>& key_and_nonce,
                    std::uint32_t counter, std::uint32_t out[16]) {
  std::uint32_t s[16] = {0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u,
                         key_and_nonce[0], key_and_nonce[1], key_and_nonce[2],
                         key_and_nonce[3], key_and_nonce[4], key_and_nonce[5],
                         key_and_nonce[6], key_and_nonce[7], counter,
                         key_and_nonce[8], key_and_nonce[9], key_and_nonce[10]};
  std::uint32_t w[16];
  for (int i = 0; i < 16; ++i) w[i] = s[i];
  for (int round = 0; round < 10; ++round) {
    quarter_round(w[0], w[4], w[8], w[12]);
    quarter_round(w[1], w[5], w[9], w[13]);
    quarter_round(w[2], w[6], w[10], w[14]);
    quarter_round(w[3], w[7], w[11], w[15]);
    quarter_round(w[0], w[5], w[10], w[15]);
    quarter_round(w[1], w[6], w[11], w[12]);
    quarter_round(w[2], w[7], w[8], w[13]);
    quarter_round(w[3], w[4], w[9], w[14]);
  }
  for (int i = 0; i < 16; ++i) out[i] = w[i] + s[i];
}

std::array<std::uint32_t, 12> pack_key_and_nonce(const Seed256& key,
                                                 std::uint32_t n0,
                                                 std::uint32_t n1,
                                                 std::uint32_t n2) {
  std::array<std::uint32_t, 12> kn{};
  for (int i = 0; i < 8; ++i) {
    kn[i] = static_cast<std::uint32_t>(key[4 * i]) |
            static_cast<std::uint32_t>(key[4 * i + 1]) << 8 |
            static_cast<std::uint32_t>(key[4 * i + 2]) << 16 |
            static_cast<std::uint32_t>(key[4 * i + 3]) << 24;
  }
  kn[8] = n0;
  kn[9] = n1;
  kn[10] = n2;
  // kn[11] unused; kept so the array is a single contiguous blob.
  return kn;
}

}  // namespace

ChaChaStream::ChaChaStream(const Seed256& key, std::uint32_t nonce0,
                           std::uint32_t nonce1, std::uint32_t nonce2)
    : key_and_nonce_(pack_key_and_nonce(key, nonce0, nonce1, nonce2)) {}

std::uint64_t ChaChaStream::draw_u64(std::uint64_t index) const {
  const std::uint64_t block = index / 8;
  if (block != cached_block_) {
    if (block > 0xffffffffull) {
      throw std::length_error("stream exhausted the 32-bit block counter");
    }
    std::uint32_t words[16];
    chacha20_block(key_and_nonce_, static_cast<std::uint32_t>(block), words);
    for (int i = 0; i < 8; ++i) {
      cache_[i] = static_cast<std::uint64_t>(words[2 * i]) |
                  static_cast<std::uint64_t>(words[2 * i + 1]) << 32;
    }
    cached_block_ = block;
  }
  return cache_[index % 8];
}

double ChaChaStream::unit(std::uint64_t index) const {
  return static_cast<double>(draw_u64(index) >> 11) * 0x1.0p-53;
}

double ChaChaStream::unit_open(std::uint64_t index) const {
  return static_cast<double>((draw_u64(index) >> 11) + 1) * 0x1.0p-53;
}

double ChaChaStream::gaussian(std::uint64_t k) const {
  const double u1 = unit_open(2 * k);
  const double u2 = unit(2 * k + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Seed256 derive_seed(const Seed256& master, std::uint32_t tag, std::uint32_t a,
                    std::uint32_t b) {
  std::uint32_t words[16];
  chacha20_block(pack_key_and_nonce(master, tag, a, b), 0, words);
  Seed256 out;
  for (int i = 0; i < 8; ++i) {
    out[4 * i] = static_cast<std::uint8_t>(words[i]);
    out[4 * i + 1] = static_cast<std::uint8_t>(words[i] >> 8);
    out[4 * i + 2] = static_cast<std::uint8_t>(words[i] >> 16);
    out[4 * i + 3] = static_cast<std::uint8_t>(words[i] >> 24);
  }
  return out;
}

Seed256 seed_from_u64(std::uint64_t value) {
  Seed256 seed{};
  for (int i = 0; i < 8; ++i) {
    seed[i] = static_cast<std::uint8_t>(value >> (8 * i));
  }
  return derive_seed(seed, 0, 0, 0);
}

double SequentialRng::gaussian() {
  const double u1 = stream_.unit_open(next_++);
  const double u2 = stream_.unit(next_++);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t SequentialRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("bound must be positive");
  const std::uint64_t limit = ~0ull - ~0ull % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

}  // namespace cordp
