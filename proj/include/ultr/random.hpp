/*
 * Copyright 2026 The ultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef ULTR_RANDOM_HPP_
#define ULTR_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ultr {

// splitmix64 finalizer; also used as the generic 64-bit mixer for seed
// derivation. Reference: Vigna, http://prng.di.unimi.it/splitmix64.c
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/*!
 * \brief Seedable, splittable random stream (xoshiro256++).
 *
 * std:: engines are portable but std:: distributions are not; every draw
 * here is fully specified so simulations reproduce bit-exactly across
 * platforms and compilers. Substreams are derived by name/index so
 * per-(query, repetition) work can run in any order.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  //! Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  //! Uniform integer in [0, n), n > 0. Unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  //! Standard normal via Box-Muller (single value; the pair's twin dropped).
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  //! Child stream independent of this one, keyed by (label, index).
  Rng substream(std::string_view label, std::uint64_t index) const {
    std::uint64_t s = state_[0] ^ rotl(state_[2], 31);
    s ^= fnv1a64(label);
    s ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    return Rng(s);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

//! Deterministic stream seed for a (seed, query_id, repetition) cell.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view query_id,
                                 std::uint64_t repetition) {
  std::uint64_t s = seed ^ fnv1a64(query_id) ^ (0xd1b54a32d192ed03ULL * (repetition + 1));
  return splitmix64(s);
}

}  // namespace ultr

#endif  // ULTR_RANDOM_HPP_
