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

#ifndef AKV_PMEM_EXTENT_HEAP_HPP
#define AKV_PMEM_EXTENT_HEAP_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "akv/pmem/region.hpp"
#include "akv/pmem/undo_log.hpp"
#include "akv/status.hpp"

namespace akv::pmem {

/* Boundary-tag allocator over a window of a region. The persistent state
   is the chain of 16-byte extent headers itself; free lists are volatile
   and rebuilt by a linear scan on open. Payloads are 16-byte aligned or
   better on request. */
class ExtentHeap {
 public:
  static constexpr uint64_t kHeaderSize = 16;
  static constexpr uint64_t kMinExtent = 32;

  /* Write the initial single free chunk spanning the window. Caller
     persists via the surrounding create path. */
  static void format(Region& region, uint64_t base, uint64_t end);

  /* Rebuild volatile state from the persistent header chain. */
  ExtentHeap(Region& region, uint64_t base, uint64_t end);

  /* Allocator metadata mutations are logged through the caller's open
     transaction (sink), so they commit atomically with whatever
     structural update references the extent. */
  Result<uint64_t> alloc(uint64_t size, uint64_t alignment, TxSink& tx);
  Status free(uint64_t payload_offset, TxSink& tx);

  uint64_t free_bytes() const { return free_bytes_; }
  uint64_t used_bytes() const { return used_bytes_; }
  uint64_t base() const { return base_; }
  uint64_t end() const { return end_; }
  bool contains(uint64_t payload_offset) const {
    return payload_offset >= base_ + kHeaderSize && payload_offset < end_;
  }

  /* Payload length of a live allocation. */
  Result<uint64_t> payload_size(uint64_t payload_offset) const;

  struct Extent {
    uint64_t offset;  /* header offset */
    uint64_t length;  /* including header */
    bool allocated;
  };
  std::vector<Extent> extents() const;

  /* Rescan persistent headers and verify they agree with the volatile
     view: contiguous coverage, no overlap, valid tags. */
  bool check_consistency() const;

 private:
  struct Info {
    uint64_t length;
    bool allocated;
  };

  void write_header(uint64_t offset, uint64_t length, bool allocated);
  void insert_free(uint64_t offset, uint64_t length);
  void remove_free(uint64_t offset, uint64_t length);

  Region& region_;
  uint64_t base_;
  uint64_t end_;
  uint64_t free_bytes_ = 0;
  uint64_t used_bytes_ = 0;

  std::map<uint64_t, Info> by_offset_;               /* every extent */
  std::multimap<uint64_t, uint64_t> free_by_size_;   /* length -> offset */
};

}  // namespace akv::pmem

#endif
