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

#ifndef AKV_PMEM_UNDO_LOG_HPP
#define AKV_PMEM_UNDO_LOG_HPP

#include "akv/pmem/space.hpp"
#include "akv/status.hpp"

namespace akv::pmem {

/* Pre-image undo log stored inside a Space. tx_commit is the commit
   point: covered ranges are made durable, then a single atomic state
   store retires the log. Recovery with an ACTIVE state rolls pre-images
   back in reverse order. Transactions nest; only the outermost pair
   touches the log state. */
class UndoLog {
 public:
  static constexpr uint64_t kMaxEntryBytes = 64;
  static constexpr uint64_t kEntrySize = 80; /* addr, length, old_bytes[64] */
  static constexpr uint64_t kEntriesBase = 32;

  static uint64_t footprint(uint64_t capacity_entries) {
    return kEntriesBase + capacity_entries * kEntrySize;
  }

  /* Initialize an IDLE log at log_addr (caller persists via create path). */
  static void format(Space& space, uint64_t log_addr, uint64_t capacity_entries);

  UndoLog(Space& space, uint64_t log_addr);

  uint64_t capacity() const { return capacity_; }

  void recover();

  void tx_begin();
  void tx_log(uint64_t addr, uint64_t length);
  void tx_commit();
  bool tx_active() const { return depth_ > 0; }
  int depth() const { return depth_; }

  /* Drop volatile nesting state after an injected crash unwound. */
  void reset_volatile() { depth_ = 0; }

 private:
  Space& space_;
  uint64_t log_addr_;
  uint64_t capacity_;
  int depth_ = 0;
};

/* Transaction sink handing pre-image logging to an UndoLog, with an
   optional fixed address translation (used to map region offsets into
   pool-packed addresses). */
struct TxSink {
  virtual ~TxSink() = default;
  virtual void log(uint64_t addr, uint64_t length) = 0;
};

class LogTxSink : public TxSink {
 public:
  explicit LogTxSink(UndoLog& log, uint64_t addr_base = 0)
      : log_(log), base_(addr_base) {}
  void log(uint64_t addr, uint64_t length) override {
    log_.tx_log(base_ + addr, length);
  }

 private:
  UndoLog& log_;
  uint64_t base_;
};

}  // namespace akv::pmem

#endif
