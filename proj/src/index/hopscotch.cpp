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

#include "akv/index/hopscotch.hpp"

#include <algorithm>
#include <cstring>

#include "akv/hash.hpp"

namespace akv::index {

namespace {

/* header field offsets */
constexpr uint64_t kHdrBucketCount = 0;
constexpr uint64_t kHdrHopRange = 8;
constexpr uint64_t kHdrSeed = 16;
constexpr uint64_t kHdrBucketsAddr = 24;
constexpr uint64_t kHdrCount = 32;
constexpr uint64_t kHeaderBytes = 48;

/* entry field offsets */
constexpr uint64_t kEntKeyAddr = 0;
constexpr uint64_t kEntKeyLen = 8;
constexpr uint64_t kEntValueAddr = 16;
constexpr uint64_t kEntValueLen = 24;
constexpr uint64_t kEntLockWord = 32;
constexpr uint64_t kEntHash = 40;

void store_u64(store::Pool& pool, uint64_t addr, uint64_t v) {
  std::byte b[8];
  put_u64_le(b, v);
  pool.write(addr, {b, 8});
}

void store_u32(store::Pool& pool, uint64_t addr, uint32_t v) {
  std::byte b[4];
  put_u32_le(b, v);
  pool.write(addr, {b, 4});
}

}  // namespace

Result<uint64_t> HopscotchTable::create(store::Pool& pool,
                                        uint64_t initial_buckets,
                                        uint64_t neighborhood, uint64_t seed) {
  if (!is_pow2(initial_buckets) || neighborhood < 2 || neighborhood > 32 ||
      initial_buckets < 2 * neighborhood)
    return {Status::ParameterError, 0};

  auto hdr = pool.alloc(kHeaderBytes, 8);
  if (!hdr.ok()) return hdr;
  auto arr = pool.alloc(initial_buckets * kBucketSize, 8);
  if (!arr.ok()) {
    pool.free(hdr.value);
    return arr;
  }

  pool.fill_zero(arr.value, initial_buckets * kBucketSize);
  pool.persist(arr.value, initial_buckets * kBucketSize);

  store_u64(pool, hdr.value + kHdrBucketCount, initial_buckets);
  store_u64(pool, hdr.value + kHdrHopRange, neighborhood);
  store_u64(pool, hdr.value + kHdrSeed, seed);
  store_u64(pool, hdr.value + kHdrBucketsAddr, arr.value);
  store_u64(pool, hdr.value + kHdrCount, 0);
  pool.persist(hdr.value, kHeaderBytes);
  return hdr;
}

HopscotchTable::HopscotchTable(store::Pool& pool, uint64_t header_addr)
    : pool_(pool), header_(header_addr) {
  reload_header();
  if (!is_pow2(buckets_) || hop_range_ < 2 || hop_range_ > 32)
    throw Error(Status::FormatError, "bad index header");
}

void HopscotchTable::reload_header() {
  buckets_ = pool_.load_u64(header_ + kHdrBucketCount);
  hop_range_ = pool_.load_u64(header_ + kHdrHopRange);
  seed_ = pool_.load_u64(header_ + kHdrSeed);
  buckets_addr_ = pool_.load_u64(header_ + kHdrBucketsAddr);
}

uint64_t HopscotchTable::bucket_entry(uint64_t index) const {
  return pool_.load_u64(bucket_addr(index) + 8);
}

uint32_t HopscotchTable::bucket_bitmap(uint64_t index) const {
  return get_u32_le(pool_.read(bucket_addr(index), 4).data());
}

void HopscotchTable::write_bucket(uint64_t index, uint32_t bitmap,
                                  uint64_t entry_addr) {
  store_u32(pool_, bucket_addr(index), bitmap);
  store_u64(pool_, bucket_addr(index) + 8, entry_addr);
}

void HopscotchTable::log_bucket(uint64_t index) {
  pool_.tx_log(bucket_addr(index), kBucketSize);
}

uint64_t HopscotchTable::count() const {
  return pool_.load_u64(header_ + kHdrCount);
}

uint64_t HopscotchTable::bucket_count() const { return buckets_; }

Result<uint64_t> HopscotchTable::locate(byte_span key, uint64_t hash) const {
  uint64_t home = home_of(hash);
  uint32_t map = bucket_bitmap(home);
  uint64_t mask = buckets_ - 1;
  while (map) {
    unsigned i = unsigned(__builtin_ctz(map));
    map &= map - 1;
    uint64_t e = bucket_entry((home + i) & mask);
    if (e == 0) continue;
    if (pool_.load_u64(e + kEntHash) != hash) continue;
    uint64_t klen = pool_.load_u64(e + kEntKeyLen);
    if (klen != key.size()) continue;
    if (klen == 0 ||
        std::memcmp(pool_.read(pool_.load_u64(e + kEntKeyAddr), klen).data(),
                    key.data(), klen) == 0)
      return {Status::Ok, (home + i) & mask};
  }
  return {Status::NotFound, 0};
}

Result<uint64_t> HopscotchTable::find_entry(byte_span key) const {
  uint64_t hash = hash_bytes(key, seed_);
  auto b = locate(key, hash);
  if (!b.ok()) return b;
  return {Status::Ok, bucket_entry(b.value)};
}

Result<ValueRef> HopscotchTable::get(byte_span key) const {
  auto e = find_entry(key);
  if (!e.ok()) return {e.status, {}};
  return {Status::Ok, entry_value(e.value)};
}

ValueRef HopscotchTable::entry_value(uint64_t entry_addr) const {
  return {pool_.load_u64(entry_addr + kEntValueAddr),
          pool_.load_u64(entry_addr + kEntValueLen)};
}

std::string HopscotchTable::entry_key(uint64_t entry_addr) const {
  uint64_t len = pool_.load_u64(entry_addr + kEntKeyLen);
  if (len == 0) return {};
  return to_string(pool_.read(pool_.load_u64(entry_addr + kEntKeyAddr), len));
}

uint64_t HopscotchTable::lock_word(uint64_t entry_addr) const {
  return pool_.load_u64(entry_addr + kEntLockWord);
}

void HopscotchTable::set_lock_word(uint64_t entry_addr, uint64_t value) {
  pool_.atomic_store_u64(entry_addr + kEntLockWord, value);
  pool_.persist(entry_addr + kEntLockWord, 8);
}

ValueRef HopscotchTable::swap_value(uint64_t entry_addr, ValueRef ref) {
  ValueRef old = entry_value(entry_addr);
  pool_.tx_begin();
  pool_.tx_log(entry_addr + kEntValueAddr, 16);
  store_u64(pool_, entry_addr + kEntValueAddr, ref.addr);
  store_u64(pool_, entry_addr + kEntValueLen, ref.len);
  pool_.tx_commit();
  ++epoch_;
  return old;
}

Result<HopscotchTable::PutOutcome> HopscotchTable::put(byte_span key,
                                                       ValueRef ref) {
  uint64_t hash = hash_bytes(key, seed_);
  auto b = locate(key, hash);
  if (b.ok()) {
    uint64_t e = bucket_entry(b.value);
    PutOutcome out;
    out.replaced = true;
    out.old_ref = swap_value(e, ref);
    return {Status::Ok, out};
  }

  /* Fresh key: the key copy and entry record are allocated in their own
     transactions. A crash before the insert commits leaks the extents
     but leaves the table untouched. */
  uint64_t key_addr = 0;
  if (!key.empty()) {
    auto ka = pool_.alloc(key.size(), 8);
    if (!ka.ok()) return {ka.status, {}};
    key_addr = ka.value;
    pool_.write(key_addr, key);
    pool_.persist(key_addr, key.size());
  }
  auto ea = pool_.alloc(kEntrySize, 8);
  if (!ea.ok()) {
    if (key_addr) pool_.free(key_addr);
    return {ea.status, {}};
  }
  store_u64(pool_, ea.value + kEntKeyAddr, key_addr);
  store_u64(pool_, ea.value + kEntKeyLen, key.size());
  store_u64(pool_, ea.value + kEntValueAddr, ref.addr);
  store_u64(pool_, ea.value + kEntValueLen, ref.len);
  store_u64(pool_, ea.value + kEntLockWord, 0);
  store_u64(pool_, ea.value + kEntHash, hash);
  pool_.persist(ea.value, kEntrySize);

  for (int attempt = 0; attempt < 48; ++attempt) {
    Status s = insert_fresh(ea.value, hash);
    if (s == Status::Ok) {
      ++epoch_;
      return {Status::Ok, PutOutcome{}};
    }
    if (s != Status::CapacityError) return {s, {}};
    Status rs = resize();
    if (rs != Status::Ok) {
      if (key_addr) pool_.free(key_addr);
      pool_.free(ea.value);
      return {rs, {}};
    }
  }
  return {Status::CapacityError, {}};
}

Status HopscotchTable::insert_fresh(uint64_t entry_addr, uint64_t hash) {
  uint64_t mask = buckets_ - 1;
  uint64_t home = home_of(hash);

  uint64_t dist = buckets_;
  for (uint64_t i = 0; i < buckets_; ++i) {
    if (bucket_entry((home + i) & mask) == 0) {
      dist = i;
      break;
    }
  }
  if (dist == buckets_) return Status::CapacityError;

  pool_.tx_begin();
  while (dist >= hop_range_) {
    /* Pull an entry whose neighborhood still covers the free slot
       forward into it; prefer the candidate farthest back. */
    bool moved = false;
    for (uint64_t back = hop_range_ - 1; back >= 1; --back) {
      uint64_t cand = (home + dist - back) & mask;
      uint64_t e = bucket_entry(cand);
      if (e == 0) continue;
      uint64_t ch = home_of(pool_.load_u64(e + kEntHash));
      uint64_t free_idx = (home + dist) & mask;
      uint64_t fd = (free_idx - ch) & mask;
      if (fd >= hop_range_) continue;
      uint64_t cd = (cand - ch) & mask;

      log_bucket(free_idx);
      log_bucket(cand);
      log_bucket(ch);
      store_u64(pool_, bucket_addr(free_idx) + 8, e);
      store_u64(pool_, bucket_addr(cand) + 8, 0);
      uint32_t map = bucket_bitmap(ch);
      map = (map & ~(1u << cd)) | (1u << fd);
      store_u32(pool_, bucket_addr(ch), map);

      dist -= back;
      moved = true;
      break;
    }
    if (!moved) {
      /* Dead end: the moves so far preserved validity, commit them and
         let the caller resize. */
      pool_.tx_commit();
      return Status::CapacityError;
    }
  }

  uint64_t slot = (home + dist) & mask;
  log_bucket(slot);
  log_bucket(home);
  pool_.tx_log(header_ + kHdrCount, 8);
  store_u64(pool_, bucket_addr(slot) + 8, entry_addr);
  store_u32(pool_, bucket_addr(home),
            bucket_bitmap(home) | (1u << uint32_t(dist)));
  store_u64(pool_, header_ + kHdrCount, count() + 1);
  pool_.tx_commit();
  return Status::Ok;
}

Status HopscotchTable::resize() {
  struct Item {
    uint64_t entry;
    uint64_t hash;
  };
  std::vector<Item> items;
  items.reserve(size_t(count()));
  for (uint64_t i = 0; i < buckets_; ++i) {
    uint64_t e = bucket_entry(i);
    if (e) items.push_back({e, pool_.load_u64(e + kEntHash)});
  }

  uint64_t new_count = buckets_ * 2;
  std::vector<uint64_t> slots;
  std::vector<uint64_t> slot_hash;
  std::vector<uint32_t> bitmaps;
  for (;; new_count *= 2) {
    if (new_count > (1ull << 40)) return Status::CapacityError;
    slots.assign(new_count, 0);
    slot_hash.assign(new_count, 0);
    bitmaps.assign(new_count, 0);
    uint64_t mask = new_count - 1;
    bool ok = true;
    for (const Item& it : items) {
      uint64_t home = it.hash & mask;
      uint64_t dist = new_count;
      for (uint64_t i = 0; i < new_count; ++i) {
        if (slots[(home + i) & mask] == 0) {
          dist = i;
          break;
        }
      }
      while (ok && dist >= hop_range_) {
        bool moved = false;
        for (uint64_t back = hop_range_ - 1; back >= 1; --back) {
          uint64_t cand = (home + dist - back) & mask;
          if (slots[cand] == 0) continue;
          uint64_t ch = slot_hash[cand] & mask;
          uint64_t free_idx = (home + dist) & mask;
          uint64_t fd = (free_idx - ch) & mask;
          if (fd >= hop_range_) continue;
          uint64_t cd = (cand - ch) & mask;
          slots[free_idx] = slots[cand];
          slot_hash[free_idx] = slot_hash[cand];
          slots[cand] = 0;
          slot_hash[cand] = 0;
          bitmaps[ch] = (bitmaps[ch] & ~(1u << cd)) | (1u << fd);
          dist -= back;
          moved = true;
          break;
        }
        if (!moved) ok = false;
      }
      if (!ok || dist == new_count) {
        ok = false;
        break;
      }
      uint64_t slot = (home + dist) & mask;
      slots[slot] = it.entry;
      slot_hash[slot] = it.hash;
      bitmaps[home] |= 1u << uint32_t(dist);
    }
    if (ok) break;
  }

  auto arr = pool_.alloc(new_count * kBucketSize, 8);
  if (!arr.ok()) return arr.status;

  byte_buffer image(size_t(new_count * kBucketSize));
  for (uint64_t i = 0; i < new_count; ++i) {
    put_u32_le(image.data() + i * kBucketSize, bitmaps[i]);
    put_u32_le(image.data() + i * kBucketSize + 4, 0);
    put_u64_le(image.data() + i * kBucketSize + 8, slots[i]);
  }
  pool_.write(arr.value, image);
  pool_.persist(arr.value, image.size());

  uint64_t old_addr = buckets_addr_;
  pool_.tx_begin();
  pool_.tx_log(header_ + kHdrBucketCount, 8);
  pool_.tx_log(header_ + kHdrBucketsAddr, 8);
  store_u64(pool_, header_ + kHdrBucketCount, new_count);
  store_u64(pool_, header_ + kHdrBucketsAddr, arr.value);
  Status fs = pool_.free(old_addr);
  pool_.tx_commit();
  if (fs != Status::Ok) return fs;

  buckets_ = new_count;
  buckets_addr_ = arr.value;
  ++epoch_;
  return Status::Ok;
}

Result<ValueRef> HopscotchTable::erase(byte_span key) {
  uint64_t hash = hash_bytes(key, seed_);
  auto b = locate(key, hash);
  if (!b.ok()) return {b.status, {}};
  uint64_t slot = b.value;
  uint64_t e = bucket_entry(slot);
  ValueRef old = entry_value(e);
  uint64_t key_addr = pool_.load_u64(e + kEntKeyAddr);
  uint64_t home = home_of(hash);
  uint64_t dist = (slot - home) & (buckets_ - 1);

  pool_.tx_begin();
  log_bucket(slot);
  log_bucket(home);
  pool_.tx_log(header_ + kHdrCount, 8);
  store_u64(pool_, bucket_addr(slot) + 8, 0);
  store_u32(pool_, bucket_addr(home),
            bucket_bitmap(home) & ~(1u << uint32_t(dist)));
  store_u64(pool_, header_ + kHdrCount, count() - 1);
  if (key_addr) pool_.free(key_addr);
  pool_.free(e);
  pool_.tx_commit();
  ++epoch_;
  return {Status::Ok, old};
}

uint64_t HopscotchTable::scan_from(uint64_t& bucket) const {
  while (bucket < buckets_) {
    uint64_t e = bucket_entry(bucket);
    ++bucket;
    if (e) return e;
  }
  return 0;
}

void HopscotchTable::iterate(const Visitor& visit) const {
  for (uint64_t i = 0; i < buckets_; ++i) {
    uint64_t e = bucket_entry(i);
    if (e == 0) continue;
    uint64_t klen = pool_.load_u64(e + kEntKeyLen);
    byte_span key =
        klen ? pool_.read(pool_.load_u64(e + kEntKeyAddr), klen) : byte_span{};
    visit(key, entry_value(e), e);
  }
}

void HopscotchTable::clear_locks() {
  for (uint64_t i = 0; i < buckets_; ++i) {
    uint64_t e = bucket_entry(i);
    if (e && lock_word(e) != 0) set_lock_word(e, 0);
  }
}

uint64_t HopscotchTable::persistent_bytes() const {
  uint64_t total = kHeaderBytes + buckets_ * kBucketSize +
                   3 * pmem::ExtentHeap::kHeaderSize;
  for (uint64_t i = 0; i < buckets_; ++i) {
    uint64_t e = bucket_entry(i);
    if (e == 0) continue;
    total += kEntrySize + pmem::ExtentHeap::kHeaderSize;
    uint64_t klen = pool_.load_u64(e + kEntKeyLen);
    if (klen) total += klen + pmem::ExtentHeap::kHeaderSize;
  }
  return total;
}

bool HopscotchTable::check_invariants() const {
  uint64_t mask = buckets_ - 1;
  uint64_t live = 0;
  for (uint64_t i = 0; i < buckets_; ++i) {
    uint64_t e = bucket_entry(i);
    if (e) {
      ++live;
      uint64_t home = home_of(pool_.load_u64(e + kEntHash));
      uint64_t dist = (i - home) & mask;
      if (dist >= hop_range_) return false;
      if (!(bucket_bitmap(home) & (1u << uint32_t(dist)))) return false;
    }
  }
  if (live != count()) return false;
  for (uint64_t h = 0; h < buckets_; ++h) {
    uint32_t map = bucket_bitmap(h);
    while (map) {
      unsigned i = unsigned(__builtin_ctz(map));
      map &= map - 1;
      if (i >= hop_range_) return false;
      uint64_t e = bucket_entry((h + i) & mask);
      if (e == 0) return false;
      if (home_of(pool_.load_u64(e + kEntHash)) != h) return false;
    }
  }
  return true;
}

std::vector<std::string> HopscotchTable::sorted_keys() const {
  std::vector<std::string> keys;
  keys.reserve(size_t(count()));
  iterate([&](byte_span key, ValueRef, uint64_t) {
    keys.push_back(to_string(key));
  });
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace akv::index
