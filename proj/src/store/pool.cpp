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

#include "akv/store/pool.hpp"

#include <sys/stat.h>
#include <unistd.h>

namespace akv::store {

using pmem::ExtentHeap;
using pmem::Region;
using pmem::RegionOptions;
using pmem::UndoLog;

std::string Pool::region_path(size_t index) const {
  return base_path_ + "." + std::to_string(index);
}

bool Pool::exists(const std::string& base_path) {
  struct stat st;
  return ::stat((base_path + ".0").c_str(), &st) == 0;
}

void Pool::remove_files(const std::string& base_path) {
  for (size_t i = 0;; ++i) {
    std::string p = base_path + "." + std::to_string(i);
    if (::unlink(p.c_str()) != 0) break;
  }
}

std::unique_ptr<Pool> Pool::create(const std::string& base_path,
                                   const PoolOptions& opts) {
  auto pool = std::unique_ptr<Pool>(new Pool());
  pool->base_path_ = base_path;
  pool->opts_ = opts;
  pool->clock_ = std::make_shared<pmem::CrashClock>();

  RegionOptions ropts{opts.undo_log_entries, opts.simulate,
                      /*recover_log=*/false};
  auto r0 = Region::create(pool->region_path(0), opts.initial_size, ropts);
  pool->attach_region(std::move(r0), /*fresh=*/true);
  pool->log_ = std::make_unique<UndoLog>(*pool, pool->regions_[0]->log_offset());
  return pool;
}

std::unique_ptr<Pool> Pool::open(const std::string& base_path,
                                 const PoolOptions& opts) {
  auto pool = std::unique_ptr<Pool>(new Pool());
  pool->base_path_ = base_path;
  pool->opts_ = opts;
  pool->clock_ = std::make_shared<pmem::CrashClock>();

  RegionOptions ropts{opts.undo_log_entries, opts.simulate,
                      /*recover_log=*/false};
  for (size_t i = 0;; ++i) {
    struct stat st;
    std::string p = base_path + "." + std::to_string(i);
    if (::stat(p.c_str(), &st) != 0) {
      if (i == 0) throw Error(Status::NotFound, "pool missing: " + base_path);
      break;
    }
    auto r = Region::open(p, ropts);
    r->set_crash_clock(pool->clock_);
    pool->regions_.push_back(std::move(r));
  }

  /* roll back any interrupted transaction before heap rebuild */
  pool->log_ = std::make_unique<UndoLog>(*pool, pool->regions_[0]->log_offset());
  pool->log_->recover();

  for (auto& r : pool->regions_)
    pool->heaps_.push_back(
        std::make_unique<ExtentHeap>(*r, r->heap_base(), r->heap_end()));
  return pool;
}

void Pool::attach_region(std::unique_ptr<Region> r, bool fresh) {
  r->set_crash_clock(clock_);
  if (fresh) ExtentHeap::format(*r, r->heap_base(), r->heap_end());
  heaps_.push_back(std::make_unique<ExtentHeap>(*r, r->heap_base(), r->heap_end()));
  regions_.push_back(std::move(r));
}

Region& Pool::region_for(uint64_t addr, uint64_t length) const {
  uint32_t idx = region_of(addr);
  if (idx >= regions_.size())
    throw Error(Status::BoundsError, "pool address names unknown region");
  Region& r = *regions_[idx];
  uint64_t off = offset_of(addr);
  if (off > r.capacity() || length > r.capacity() - off)
    throw Error(Status::BoundsError, "pool access out of range");
  return r;
}

byte_span Pool::read(uint64_t addr, uint64_t length) const {
  std::lock_guard<std::recursive_mutex> g(mu_);

  return region_for(addr, length).read(offset_of(addr), length);
}

void Pool::write(uint64_t addr, byte_span bytes) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  region_for(addr, bytes.size()).write(offset_of(addr), bytes);
}

void Pool::atomic_store_u64(uint64_t addr, uint64_t value) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  region_for(addr, 8).atomic_store_u64(offset_of(addr), value);
}

void Pool::persist(uint64_t addr, uint64_t length) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  region_for(addr, length).persist(offset_of(addr), length);
}

void Pool::fill_zero(uint64_t addr, uint64_t length) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  region_for(addr, length).fill_zero(offset_of(addr), length);
}

Result<uint64_t> Pool::alloc(uint64_t size, uint64_t alignment) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  tx_begin();
  for (size_t i = 0; i < heaps_.size(); ++i) {
    pmem::LogTxSink sink(*log_, pack(uint32_t(i), 0));
    auto r = heaps_[i]->alloc(size, alignment, sink);
    if (r.status != Status::OutOfMemory) {
      tx_commit();
      if (r.ok()) r.value = pack(uint32_t(i), r.value);
      return r;
    }
  }
  if (opts_.allow_growth && size + 2 * ExtentHeap::kHeaderSize +
                                Region::kHeaderSize + alignment <
                            opts_.expansion_size) {
    Status gs = grow();
    if (gs == Status::Ok) {
      size_t i = heaps_.size() - 1;
      pmem::LogTxSink sink(*log_, pack(uint32_t(i), 0));
      auto r = heaps_[i]->alloc(size, alignment, sink);
      tx_commit();
      if (r.ok()) r.value = pack(uint32_t(i), r.value);
      return r;
    }
  }
  tx_commit();
  return {Status::OutOfMemory, 0};
}

Status Pool::grow() {
  size_t idx = regions_.size();
  if (idx >= 0xffff) return Status::OutOfMemory;
  RegionOptions ropts{/*undo_log_entries=*/64, opts_.simulate,
                      /*recover_log=*/false};
  try {
    auto r = Region::create(region_path(idx), opts_.expansion_size, ropts);
    attach_region(std::move(r), /*fresh=*/true);
  } catch (const Error&) {
    return Status::OutOfMemory;
  }
  return Status::Ok;
}

Status Pool::free(uint64_t addr) {
  std::lock_guard<std::recursive_mutex> g(mu_);

  uint32_t idx = region_of(addr);
  if (idx >= heaps_.size()) return Status::HeapCorruption;
  tx_begin();
  pmem::LogTxSink sink(*log_, pack(idx, 0));
  Status s = heaps_[idx]->free(offset_of(addr), sink);
  tx_commit();
  return s;
}

Result<uint64_t> Pool::payload_size(uint64_t addr) const {
  std::lock_guard<std::recursive_mutex> g(mu_);

  uint32_t idx = region_of(addr);
  if (idx >= heaps_.size()) return {Status::NotFound, 0};
  return heaps_[idx]->payload_size(offset_of(addr));
}

Pool::Stats Pool::stats() const {
  std::lock_guard<std::recursive_mutex> g(mu_);

  Stats s;
  s.region_count = uint32_t(regions_.size());
  for (size_t i = 0; i < regions_.size(); ++i) {
    s.capacity += regions_[i]->capacity();
    s.heap_used += heaps_[i]->used_bytes();
    s.heap_free += heaps_[i]->free_bytes();
  }
  return s;
}

bool Pool::check_heaps() const {
  std::lock_guard<std::recursive_mutex> g(mu_);

  for (auto& h : heaps_)
    if (!h->check_consistency()) return false;
  return true;
}

void Pool::close() {
  for (auto& r : regions_) r->close();
}

void Pool::poison() {
  for (auto& r : regions_) r->poison();
}

void Pool::materialize_crash(SplitMix64& rng) {
  for (auto& r : regions_) r->materialize_crash(rng);
  log_->reset_volatile();
}

}  // namespace akv::store
