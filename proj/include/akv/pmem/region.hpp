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

#ifndef AKV_PMEM_REGION_HPP
#define AKV_PMEM_REGION_HPP

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "akv/bytes.hpp"
#include "akv/hash.hpp"
#include "akv/pmem/space.hpp"
#include "akv/status.hpp"

namespace akv::pmem {

/* Shared crash-point counter. Armed by the crash harness; every store and
   persist on any region sharing the clock ticks it, and the op at which
   the countdown expires raises CrashInjected before taking effect. */
class CrashClock {
 public:
  void arm(int64_t ops) { countdown_.store(ops); }
  void disarm() { countdown_.store(-1); }
  bool armed() const { return countdown_.load() >= 0; }

  void tick() {
    int64_t c = countdown_.load(std::memory_order_relaxed);
    if (c < 0) return;
    if (countdown_.fetch_sub(1) <= 0) throw CrashInjected();
  }

 private:
  std::atomic<int64_t> countdown_{-1};
};

struct RegionOptions {
  uint64_t undo_log_entries = 4096;
  /* Simulated mode keeps a separate durable image plus a dirty-word map;
     unpersisted stores may be dropped (at 8-byte granularity) when a
     crash is materialized. Non-simulated mode write-through-persists to
     the backing file. */
  bool simulate = false;
  /* Run undo-log recovery against the region's own log on open. A pool
     disables this and recovers through its pool-wide log instead. */
  bool recover_log = true;
};

/* A file-backed byte region with a recoverable root, a reserved undo-log
   area, and explicit durability barriers. All durable cross-references
   are region-relative offsets; the file can be reopened anywhere. */
class Region : public Space {
 public:
  static constexpr uint64_t kHeaderSize = 4096;
  static constexpr uint32_t kFormatVersion = 1;
  static constexpr uint64_t kNil = 0;

  static std::unique_ptr<Region> create(const std::string& path,
                                        uint64_t capacity,
                                        const RegionOptions& opts = {});
  static std::unique_ptr<Region> open(const std::string& path,
                                      const RegionOptions& opts = {});

  ~Region() override;
  Region(const Region&) = delete;
  Region& operator=(const Region&) = delete;

  uint64_t capacity() const { return capacity_; }
  uint64_t heap_base() const { return heap_base_; }
  uint64_t heap_end() const { return capacity_; }
  uint64_t log_offset() const { return log_offset_; }
  const std::string& path() const { return path_; }
  bool simulated() const { return opts_.simulate; }

  /* reads */
  const std::byte* data() const { return working_.data(); }
  byte_span read(uint64_t offset, uint64_t length) const override;

  /* writes (working image; durable only after persist) */
  void write(uint64_t offset, byte_span bytes) override;
  void fill_zero(uint64_t offset, uint64_t length);

  /* 8-byte aligned store; never torn by a crash */
  void atomic_store_u64(uint64_t offset, uint64_t value) override;

  /* durability barrier */
  void persist(uint64_t offset, uint64_t length) override;

  uint64_t root() const;
  void set_root(uint64_t offset);

  void set_crash_clock(std::shared_ptr<CrashClock> clock) {
    crash_clock_ = std::move(clock);
  }

  /* Clean shutdown: flush the full working image. The destructor does
     the same unless the region was poisoned by a crash. */
  void close();

  /* Simulated mode only: compose the post-crash file image (persisted
     ranges intact, each dirty unpersisted 8-byte word independently kept
     or dropped), write it out, and poison this handle. */
  void materialize_crash(SplitMix64& rng);
  void poison() { poisoned_ = true; }

 private:
  Region() = default;

  void check_bounds(uint64_t offset, uint64_t length) const;
  void raw_write(uint64_t offset, const std::byte* src, uint64_t length);
  void mark_dirty(uint64_t offset, uint64_t length);
  void make_durable(uint64_t offset, uint64_t length);
  void flush_file_range(uint64_t offset, uint64_t length);
  void load_header();

  friend class UndoLogRecovery;

  std::string path_;
  RegionOptions opts_;
  uint64_t capacity_ = 0;
  uint64_t heap_base_ = 0;
  uint64_t log_offset_ = 0;
  bool poisoned_ = false;
  int fd_ = -1;

  byte_buffer working_;
  byte_buffer durable_;             /* simulate mode only */
  std::vector<uint64_t> dirty_;     /* bit per 8-byte word, simulate mode */
  std::shared_ptr<CrashClock> crash_clock_;
};

}  // namespace akv::pmem

#endif
