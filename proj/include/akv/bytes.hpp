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

#ifndef AKV_BYTES_HPP
#define AKV_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace akv {

using byte_span = std::span<const std::byte>;
using byte_buffer = std::vector<std::byte>;

/* All durable and wire integers are little-endian. Encoding goes through
   these helpers so the on-disk format does not depend on host order. */

inline void put_u16_le(std::byte* p, uint16_t v) {
  p[0] = std::byte(v & 0xff);
  p[1] = std::byte((v >> 8) & 0xff);
}

inline void put_u32_le(std::byte* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = std::byte((v >> (8 * i)) & 0xff);
}

inline void put_u64_le(std::byte* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = std::byte((v >> (8 * i)) & 0xff);
}

inline uint16_t get_u16_le(const std::byte* p) {
  return uint16_t(uint16_t(p[0]) | (uint16_t(p[1]) << 8));
}

inline uint32_t get_u32_le(const std::byte* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
  return v;
}

inline uint64_t get_u64_le(const std::byte* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

inline byte_span as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

inline std::string to_string(byte_span b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline byte_buffer to_buffer(byte_span b) { return {b.begin(), b.end()}; }

inline uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) & ~(a - 1); }
inline uint64_t align_down(uint64_t v, uint64_t a) { return v & ~(a - 1); }
inline bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/* Growable little-endian serializer for wire bodies and durable blobs. */
class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(std::byte(v)); }
  void u16(uint16_t v) { grow(2, [&](std::byte* p) { put_u16_le(p, v); }); }
  void u32(uint32_t v) { grow(4, [&](std::byte* p) { put_u32_le(p, v); }); }
  void u64(uint64_t v) { grow(8, [&](std::byte* p) { put_u64_le(p, v); }); }
  void bytes(byte_span b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(const std::string& s) { bytes(as_bytes(s)); }

  byte_buffer take() { return std::move(buf_); }
  const byte_buffer& data() const { return buf_; }

 private:
  template <typename F>
  void grow(size_t n, F f) {
    size_t off = buf_.size();
    buf_.resize(off + n);
    f(buf_.data() + off);
  }
  byte_buffer buf_;
};

/* Bounds-checked little-endian reader; failure means a malformed input. */
class Reader {
 public:
  explicit Reader(byte_span b) : p_(b.data()), end_(b.data() + b.size()) {}

  bool ok() const { return ok_; }
  size_t remaining() const { return size_t(end_ - p_); }

  uint8_t u8() { return take(1) ? uint8_t(p_[-1]) : 0; }
  uint16_t u16() { return take(2) ? get_u16_le(p_ - 2) : 0; }
  uint32_t u32() { return take(4) ? get_u32_le(p_ - 4) : 0; }
  uint64_t u64() { return take(8) ? get_u64_le(p_ - 8) : 0; }

  byte_span bytes(size_t n) {
    if (!take(n)) return {};
    return {p_ - n, n};
  }
  std::string str(size_t n) { return to_string(bytes(n)); }

 private:
  bool take(size_t n) {
    if (!ok_ || size_t(end_ - p_) < n) {
      ok_ = false;
      return false;
    }
    p_ += n;
    return true;
  }
  const std::byte* p_;
  const std::byte* end_;
  bool ok_ = true;
};

}  // namespace akv

#endif
