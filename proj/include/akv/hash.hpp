/*
  Copyright [2026] [ActiveKV Authors]
  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at
  http://www.apache.org/licenses/LICENSE-2.0
  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

#ifndef AKV_HASH_HPP
#define AKV_HASH_HPP

#include <cstdint>

#include "akv/bytes.hpp"

namespace akv {

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/* Seeded 64-bit non-cryptographic hash over arbitrary bytes. The seed is
   stored alongside the structure that uses the hash so rehashing is
   reproducible after reopen. */
inline uint64_t hash_bytes(byte_span data, uint64_t seed) {
  uint64_t h = seed ^ (0x9e3779b97f4a7c15ull + data.size());
  size_t i = 0;
  while (i + 8 <= data.size()) {
    h = mix64(h ^ get_u64_le(data.data() + i));
    i += 8;
  }
  uint64_t tail = 0;
  int shift = 0;
  for (; i < data.size(); ++i, shift += 8) tail |= uint64_t(data[i]) << shift;
  return mix64(h ^ tail);
}

/* splitmix64: deterministic across platforms, used everywhere a
   reproducible stream is required (workload generation, crash-point
   selection, fuzzing). std::uniform_int_distribution is not portable
   across standard libraries, so ranged draws are hand-rolled. */
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  /* uniform in [0, bound) */
  uint64_t next_below(uint64_t bound) { return bound ? next() % bound : 0; }

  /* uniform in [lo, hi] inclusive */
  uint64_t next_range(uint64_t lo, uint64_t hi) {
    return lo + next_below(hi - lo + 1);
  }

  bool next_bool() { return next() & 1; }

 private:
  uint64_t state_;
};

/* Order-sensitive streaming digest for logical state comparison. */
class Digest {
 public:
  void u64(uint64_t v) { h_ = mix64(h_ ^ v); }
  void bytes(byte_span b) { h_ = mix64(h_ ^ hash_bytes(b, h_)); }
  void str(const std::string& s) { bytes(as_bytes(s)); }
  uint64_t value() const { return h_; }

 private:
  uint64_t h_ = 0x9ae16a3b2f90404full;
};

}  // namespace akv

#endif
