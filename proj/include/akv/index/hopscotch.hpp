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

#ifndef AKV_INDEX_HOPSCOTCH_HPP
#define AKV_INDEX_HOPSCOTCH_HPP

#include <functional>
#include <string>
#include <vector>

#include "akv/store/pool.hpp"

namespace akv::index {

struct ValueRef {
  uint64_t addr = 0;
  uint64_t len = 0;
};

/* Persistent hopscotch hash table mapping variable-length keys to value
   references, stored entirely inside a pool. Every stored key lives
   within H-1 slots of its home bucket; displacement chains and resizes
   run under a single pool transaction so each mutation is crash-atomic. */
class HopscotchTable {
 public:
  static constexpr uint64_t kDefaultNeighborhood = 32;

  static constexpr uint64_t kBucketSize = 16;
  static constexpr uint64_t kEntrySize = 48;

  /* Allocates and zeroes a table; returns the header address (callers
     store it under the pool root). initial_buckets must be a power of
     two >= 2H. */
  static Result<uint64_t> create(store::Pool& pool, uint64_t initial_buckets,
                                 uint64_t neighborhood = kDefaultNeighborhood,
                                 uint64_t seed = 0x5eed5eed5eed5eedull);

  HopscotchTable(store::Pool& pool, uint64_t header_addr);

  struct PutOutcome {
    bool replaced = false;
    ValueRef old_ref; /* valid when replaced; caller owns the extent */
  };
  Result<PutOutcome> put(byte_span key, ValueRef ref);
  Result<ValueRef> get(byte_span key) const;
  /* Returns the removed value ref; the caller frees its extent. */
  Result<ValueRef> erase(byte_span key);

  /* Entry handle access (used for lock words and in-place value swaps). */
  Result<uint64_t> find_entry(byte_span key) const;
  ValueRef entry_value(uint64_t entry_addr) const;
  std::string entry_key(uint64_t entry_addr) const;
  uint64_t lock_word(uint64_t entry_addr) const;
  void set_lock_word(uint64_t entry_addr, uint64_t value);
  /* Replace an entry's value ref under a transaction; returns old ref. */
  ValueRef swap_value(uint64_t entry_addr, ValueRef ref);

  using Visitor =
      std::function<void(byte_span key, ValueRef ref, uint64_t entry_addr)>;
  void iterate(const Visitor& visit) const;

  /* Scan forward from bucket index for the next live entry; advances
     bucket past it. Returns 0 when the table is exhausted. */
  uint64_t scan_from(uint64_t& bucket) const;

  uint64_t count() const;
  uint64_t bucket_count() const;
  uint64_t neighborhood() const { return hop_range_; }
  uint64_t header_addr() const { return header_; }

  /* Bumped on every mutation; iteration cursors check it. */
  uint64_t mutation_epoch() const { return epoch_; }

  /* Clear all lock words (crash recovery: in-flight owners are gone). */
  void clear_locks();

  /* Index bytes resident in the pool: bucket array + entry records +
     key payloads, including extent headers. */
  uint64_t persistent_bytes() const;

  /* Full-scan verification of neighborhood distance and hop-bitmap
     exactness. */
  bool check_invariants() const;

  /* Rebuild-on-demand sorted key digest (the simple secondary index). */
  std::vector<std::string> sorted_keys() const;

 private:
  uint64_t home_of(uint64_t hash) const { return hash & (buckets_ - 1); }
  uint64_t bucket_addr(uint64_t index) const {
    return buckets_addr_ + index * kBucketSize;
  }
  uint64_t bucket_entry(uint64_t index) const;
  uint32_t bucket_bitmap(uint64_t index) const;
  void write_bucket(uint64_t index, uint32_t bitmap, uint64_t entry_addr);
  void log_bucket(uint64_t index);
  void reload_header();
  Result<uint64_t> locate(byte_span key, uint64_t hash) const;
  Status insert_fresh(uint64_t entry_addr, uint64_t hash);
  Status resize();

  store::Pool& pool_;
  uint64_t header_;
  uint64_t buckets_ = 0;
  uint64_t hop_range_ = 0;
  uint64_t seed_ = 0;
  uint64_t buckets_addr_ = 0;
  uint64_t epoch_ = 0;
};

}  // namespace akv::index

#endif
