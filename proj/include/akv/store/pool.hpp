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

#ifndef AKV_STORE_POOL_HPP
#define AKV_STORE_POOL_HPP

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "akv/pmem/extent_heap.hpp"
#include "akv/pmem/region.hpp"
#include "akv/pmem/undo_log.hpp"

namespace akv::store {

struct PoolOptions {
  uint64_t initial_size = 64ull << 20;
  uint64_t expansion_size = 64ull << 20;
  uint64_t undo_log_entries = 4096;
  bool simulate = false;
  bool allow_growth = true;
};

/* A pool is an ordered set of region files (<base>.0, <base>.1, ...)
   forming one persistent address space. Addresses pack the region index
   into the top 16 bits and the region-relative offset into the low 48.
   One pool-wide undo log (living in region 0's log area but addressed in
   packed form) gives multi-region transactions a single commit point. */
class Pool : public pmem::Space {
 public:
  static constexpr int kRegionShift = 48;
  static constexpr uint64_t kOffsetMask = (1ull << kRegionShift) - 1;
  static constexpr uint64_t kNil = 0;

  static uint64_t pack(uint32_t region, uint64_t offset) {
    return (uint64_t(region) << kRegionShift) | offset;
  }
  static uint32_t region_of(uint64_t addr) {
    return uint32_t(addr >> kRegionShift);
  }
  static uint64_t offset_of(uint64_t addr) { return addr & kOffsetMask; }

  static std::unique_ptr<Pool> create(const std::string& base_path,
                                      const PoolOptions& opts = {});
  static std::unique_ptr<Pool> open(const std::string& base_path,
                                    const PoolOptions& opts = {});
  static bool exists(const std::string& base_path);
  static void remove_files(const std::string& base_path);

  /* Space over packed addresses */
  byte_span read(uint64_t addr, uint64_t length) const override;
  void write(uint64_t addr, byte_span bytes) override;
  void atomic_store_u64(uint64_t addr, uint64_t value) override;
  void persist(uint64_t addr, uint64_t length) override;
  void fill_zero(uint64_t addr, uint64_t length);

  /* pool-wide transactions (nestable). The internal recursive mutex
     serializes shard-context and worker-context access; lock order is
     always shard mutex before pool mutex. */
  void tx_begin() {
    std::lock_guard<std::recursive_mutex> g(mu_);
    log_->tx_begin();
  }
  void tx_log(uint64_t addr, uint64_t length) {
    std::lock_guard<std::recursive_mutex> g(mu_);
    log_->tx_log(addr, length);
  }
  void tx_commit() {
    std::lock_guard<std::recursive_mutex> g(mu_);
    log_->tx_commit();
  }
  bool tx_active() const { return log_->tx_active(); }
  pmem::TxSink& tx_sink() { return sink_; }

  /* heap: returns packed payload address */
  Result<uint64_t> alloc(uint64_t size, uint64_t alignment);
  Status free(uint64_t addr);
  Result<uint64_t> payload_size(uint64_t addr) const;

  uint64_t root() const { return regions_[0]->root(); }
  void set_root(uint64_t addr) { regions_[0]->set_root(addr); }

  const std::shared_ptr<pmem::CrashClock>& crash_clock() const { return clock_; }

  struct Stats {
    uint64_t capacity = 0;
    uint64_t heap_used = 0;
    uint64_t heap_free = 0;
    uint32_t region_count = 0;
  };
  Stats stats() const;
  size_t region_count() const { return regions_.size(); }
  const std::string& base_path() const { return base_path_; }
  bool simulated() const { return opts_.simulate; }

  bool check_heaps() const;

  void close();
  void poison();
  void materialize_crash(SplitMix64& rng);

 private:
  Pool() = default;

  class PoolTxSink : public pmem::TxSink {
   public:
    explicit PoolTxSink(Pool& p) : pool_(p) {}
    void log(uint64_t addr, uint64_t length) override {
      pool_.tx_log(addr, length);
    }

   private:
    Pool& pool_;
  } sink_{*this};

  pmem::Region& region_for(uint64_t addr, uint64_t length) const;
  void attach_region(std::unique_ptr<pmem::Region> r, bool fresh);
  Status grow();
  std::string region_path(size_t index) const;

  mutable std::recursive_mutex mu_;
  std::string base_path_;
  PoolOptions opts_;
  std::vector<std::unique_ptr<pmem::Region>> regions_;
  std::vector<std::unique_ptr<pmem::ExtentHeap>> heaps_;
  std::unique_ptr<pmem::UndoLog> log_;
  std::shared_ptr<pmem::CrashClock> clock_;
};

}  // namespace akv::store

#endif
