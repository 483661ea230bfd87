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

#include "akv/pmem/extent_heap.hpp"

namespace akv::pmem {

namespace {

constexpr uint32_t kTagAllocated = 0xA110CA7Eu;
constexpr uint32_t kTagFree = 0xF7EE0000u;

}  // namespace

void ExtentHeap::format(Region& region, uint64_t base, uint64_t end) {
  if (end <= base || end - base < kMinExtent)
    throw Error(Status::CapacityError, "heap window too small");
  std::byte hdr[kHeaderSize] = {};
  put_u32_le(hdr, kTagFree);
  put_u64_le(hdr + 8, end - base);
  region.write(base, {hdr, sizeof hdr});
  region.persist(base, sizeof hdr);
}

ExtentHeap::ExtentHeap(Region& region, uint64_t base, uint64_t end)
    : region_(region), base_(base), end_(end) {
  uint64_t off = base_;
  while (off < end_) {
    byte_span h = region_.read(off, kHeaderSize);
    uint32_t tag = get_u32_le(h.data());
    uint64_t len = get_u64_le(h.data() + 8);
    if ((tag != kTagAllocated && tag != kTagFree) || len < kMinExtent ||
        off + len > end_)
      throw Error(Status::HeapCorruption, "bad extent header during rebuild");
    bool allocated = (tag == kTagAllocated);
    by_offset_.emplace(off, Info{len, allocated});
    if (allocated) {
      used_bytes_ += len;
    } else {
      free_by_size_.emplace(len, off);
      free_bytes_ += len;
    }
    off += len;
  }
  if (off != end_)
    throw Error(Status::HeapCorruption, "extent chain does not cover heap");
}

void ExtentHeap::write_header(uint64_t offset, uint64_t length, bool allocated) {
  std::byte hdr[kHeaderSize] = {};
  put_u32_le(hdr, allocated ? kTagAllocated : kTagFree);
  put_u64_le(hdr + 8, length);
  region_.write(offset, {hdr, sizeof hdr});
}

void ExtentHeap::insert_free(uint64_t offset, uint64_t length) {
  by_offset_[offset] = Info{length, false};
  free_by_size_.emplace(length, offset);
  free_bytes_ += length;
}

void ExtentHeap::remove_free(uint64_t offset, uint64_t length) {
  auto range = free_by_size_.equal_range(length);
  for (auto it = range.first; it != range.second; ++it) {
    if (it->second == offset) {
      free_by_size_.erase(it);
      break;
    }
  }
  by_offset_.erase(offset);
  free_bytes_ -= length;
}

Result<uint64_t> ExtentHeap::alloc(uint64_t size, uint64_t alignment, TxSink& tx) {
  if (size == 0 || !is_pow2(alignment))
    return {Status::ParameterError, 0};
  uint64_t align = std::max<uint64_t>(alignment, 16);
  uint64_t padded = align_up(size, 16);

  for (auto it = free_by_size_.lower_bound(padded + kHeaderSize);
       it != free_by_size_.end(); ++it) {
    uint64_t ext = it->second;
    uint64_t ext_len = it->first;

    uint64_t payload = align_up(ext + kHeaderSize, align);
    uint64_t lead = payload - kHeaderSize - ext;
    if (lead > 0 && lead < kMinExtent)
      payload = align_up(ext + kMinExtent + kHeaderSize, align);
    lead = payload - kHeaderSize - ext;
    uint64_t alloc_len = kHeaderSize + padded;
    if (lead + alloc_len > ext_len) continue;

    uint64_t trailing = ext_len - lead - alloc_len;
    if (trailing > 0 && trailing < kMinExtent) {
      alloc_len += trailing; /* absorb slack too small to stand alone */
      trailing = 0;
    }

    remove_free(ext, ext_len);
    tx.log(ext, kHeaderSize);
    if (lead > 0) {
      write_header(ext, lead, false);
      insert_free(ext, lead);
    }
    uint64_t alloc_off = ext + lead;
    if (lead > 0) tx.log(alloc_off, kHeaderSize);
    write_header(alloc_off, alloc_len, true);
    by_offset_[alloc_off] = Info{alloc_len, true};
    used_bytes_ += alloc_len;
    if (trailing > 0) {
      uint64_t tail_off = alloc_off + alloc_len;
      tx.log(tail_off, kHeaderSize);
      write_header(tail_off, trailing, false);
      insert_free(tail_off, trailing);
    }
    return {Status::Ok, alloc_off + kHeaderSize};
  }
  return {Status::OutOfMemory, 0};
}

Status ExtentHeap::free(uint64_t payload_offset, TxSink& tx) {
  uint64_t hdr = payload_offset - kHeaderSize;
  auto it = by_offset_.find(hdr);
  if (it == by_offset_.end() || !it->second.allocated)
    return Status::HeapCorruption;
  if (get_u32_le(region_.read(hdr, 4).data()) != kTagAllocated)
    return Status::HeapCorruption;

  uint64_t len = it->second.length;
  used_bytes_ -= len;
  by_offset_.erase(it);

  uint64_t merged_off = hdr;
  uint64_t merged_len = len;

  /* coalesce with the following extent */
  auto next = by_offset_.find(hdr + len);
  if (next != by_offset_.end() && !next->second.allocated) {
    tx.log(next->first, kHeaderSize);
    merged_len += next->second.length;
    remove_free(next->first, next->second.length);
  }

  /* coalesce with the preceding extent */
  auto prev = by_offset_.lower_bound(hdr);
  if (prev != by_offset_.begin()) {
    --prev;
    if (!prev->second.allocated &&
        prev->first + prev->second.length == merged_off) {
      merged_len += prev->second.length;
      uint64_t poff = prev->first, plen = prev->second.length;
      remove_free(poff, plen);
      merged_off = poff;
    }
  }

  tx.log(merged_off, kHeaderSize);
  write_header(merged_off, merged_len, false);
  insert_free(merged_off, merged_len);
  return Status::Ok;
}

Result<uint64_t> ExtentHeap::payload_size(uint64_t payload_offset) const {
  auto it = by_offset_.find(payload_offset - kHeaderSize);
  if (it == by_offset_.end() || !it->second.allocated)
    return {Status::NotFound, 0};
  return {Status::Ok, it->second.length - kHeaderSize};
}

std::vector<ExtentHeap::Extent> ExtentHeap::extents() const {
  std::vector<Extent> out;
  out.reserve(by_offset_.size());
  for (auto& [off, info] : by_offset_)
    out.push_back({off, info.length, info.allocated});
  return out;
}

bool ExtentHeap::check_consistency() const {
  uint64_t off = base_;
  auto it = by_offset_.begin();
  while (off < end_) {
    byte_span h = region_.read(off, kHeaderSize);
    uint32_t tag = get_u32_le(h.data());
    uint64_t len = get_u64_le(h.data() + 8);
    if ((tag != kTagAllocated && tag != kTagFree) || len < kMinExtent ||
        off + len > end_)
      return false;
    if (it == by_offset_.end() || it->first != off ||
        it->second.length != len ||
        it->second.allocated != (tag == kTagAllocated))
      return false;
    ++it;
    off += len;
  }
  return off == end_ && it == by_offset_.end();
}

}  // namespace akv::pmem
