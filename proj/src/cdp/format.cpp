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

#include "akv/cdp/format.hpp"

#include <algorithm>

namespace akv::cdp {

namespace {

/* Coalesce the entry at index i with its successor when they form one
   contiguous virtual and managed run. */
void coalesce_at(BlockMap& map, size_t i) {
  while (i + 1 < map.size()) {
    MapEntry& a = map[i];
    MapEntry& b = map[i + 1];
    if (a.virt + a.len == b.virt && a.managed + a.len == b.managed) {
      a.len += b.len;
      map.erase(map.begin() + long(i) + 1);
    } else {
      break;
    }
  }
}

}  // namespace

void merge_into(BlockMap& map, uint64_t virt, uint64_t len, uint64_t managed) {
  if (len == 0) return;
  uint64_t end = virt + len;

  /* first entry whose end is past our start */
  auto it = std::lower_bound(
      map.begin(), map.end(), virt,
      [](const MapEntry& e, uint64_t v) { return e.virt + e.len <= v; });
  size_t idx = size_t(it - map.begin());

  std::vector<MapEntry> rebuilt;
  /* keep a leading fragment of the first overlapped entry */
  size_t scan = idx;
  if (scan < map.size() && map[scan].virt < virt) {
    const MapEntry& e = map[scan];
    rebuilt.push_back({e.virt, virt - e.virt, e.managed});
  }
  rebuilt.push_back({virt, len, managed});
  /* drop fully covered entries, keep a trailing fragment */
  while (scan < map.size() && map[scan].virt < end) {
    const MapEntry& e = map[scan];
    if (e.virt + e.len > end) {
      uint64_t cut = end - e.virt;
      rebuilt.push_back({end, e.len - cut, e.managed + cut});
    }
    ++scan;
  }
  map.erase(map.begin() + long(idx), map.begin() + long(scan));
  map.insert(map.begin() + long(idx), rebuilt.begin(), rebuilt.end());

  /* restore maximal-run form around the touched region */
  size_t p = idx > 0 ? idx - 1 : 0;
  size_t last = std::min(map.size(), idx + rebuilt.size() + 1);
  for (; p < last && p < map.size(); ++p) coalesce_at(map, p);
}

BlockMap clip(const BlockMap& map, uint64_t virt, uint64_t len) {
  BlockMap out;
  uint64_t end = virt + len;
  for (const MapEntry& e : map) {
    uint64_t s = std::max(e.virt, virt);
    uint64_t t = std::min(e.virt + e.len, end);
    if (s >= t) continue;
    out.push_back({s, t - s, e.managed + (s - e.virt)});
  }
  return out;
}

byte_buffer encode_update(uint64_t virt, uint32_t len, uint64_t managed,
                          uint64_t ts) {
  Writer w;
  w.u8(uint8_t(CdpTag::Update));
  w.u64(virt);
  w.u32(len);
  w.u64(managed);
  w.u64(ts);
  return w.take();
}

byte_buffer encode_query(uint64_t t) {
  Writer w;
  w.u8(uint8_t(CdpTag::Query));
  w.u64(t);
  w.u8(1); /* full */
  w.u64(0);
  w.u64(0);
  return w.take();
}

byte_buffer encode_query(uint64_t t, uint64_t range_virt, uint64_t range_len) {
  Writer w;
  w.u8(uint8_t(CdpTag::Query));
  w.u64(t);
  w.u8(0);
  w.u64(range_virt);
  w.u64(range_len);
  return w.take();
}

byte_buffer encode_trim(uint64_t now) {
  Writer w;
  w.u8(uint8_t(CdpTag::Trim));
  w.u64(now);
  return w.take();
}

byte_buffer encode_configure(uint64_t qcap, uint64_t retention, uint64_t mode,
                             uint64_t age_limit) {
  Writer w;
  w.u8(uint8_t(CdpTag::Configure));
  w.u64(qcap);
  w.u64(retention);
  w.u64(mode);
  w.u64(age_limit);
  return w.take();
}

byte_buffer encode_digest() {
  Writer w;
  w.u8(uint8_t(CdpTag::Digest));
  return w.take();
}

byte_buffer encode_block_map(const BlockMap& map) {
  Writer w;
  w.u32(uint32_t(map.size()));
  for (const MapEntry& e : map) {
    w.u64(e.virt);
    w.u64(e.len);
    w.u64(e.managed);
  }
  return w.take();
}

bool decode_block_map(byte_span body, BlockMap& out) {
  Reader r(body);
  uint32_t n = r.u32();
  out.clear();
  out.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    MapEntry e;
    e.virt = r.u64();
    e.len = r.u64();
    e.managed = r.u64();
    out.push_back(e);
  }
  return r.ok() && r.remaining() == 0;
}

}  // namespace akv::cdp
