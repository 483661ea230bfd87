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

#include "akv/pmem/undo_log.hpp"

#include <cstring>

namespace akv::pmem {

namespace {

constexpr uint64_t kStateOff = 0;
constexpr uint64_t kCountOff = 8;
constexpr uint64_t kCapacityOff = 16;

constexpr uint64_t kIdle = 0;
constexpr uint64_t kActive = 1;

}  // namespace

void UndoLog::format(Space& space, uint64_t log_addr, uint64_t capacity_entries) {
  std::byte hdr[kEntriesBase] = {};
  put_u64_le(hdr + kStateOff, kIdle);
  put_u64_le(hdr + kCountOff, 0);
  put_u64_le(hdr + kCapacityOff, capacity_entries);
  space.write(log_addr, {hdr, sizeof hdr});
  space.persist(log_addr, sizeof hdr);
}

UndoLog::UndoLog(Space& space, uint64_t log_addr)
    : space_(space), log_addr_(log_addr) {
  capacity_ = space_.load_u64(log_addr_ + kCapacityOff);
  if (capacity_ == 0 || capacity_ > (1u << 24))
    throw Error(Status::FormatError, "implausible undo log capacity");
}

void UndoLog::recover() {
  uint64_t state = space_.load_u64(log_addr_ + kStateOff);
  if (state != kActive) return;

  uint64_t count = space_.load_u64(log_addr_ + kCountOff);
  if (count > capacity_)
    throw Error(Status::FormatError, "undo log count exceeds capacity");

  for (uint64_t i = count; i-- > 0;) {
    uint64_t entry = log_addr_ + kEntriesBase + i * kEntrySize;
    uint64_t addr = space_.load_u64(entry);
    uint64_t len = space_.load_u64(entry + 8);
    if (len == 0 || len > kMaxEntryBytes)
      throw Error(Status::FormatError, "corrupt undo log entry");
    space_.write(addr, space_.read(entry + 16, len));
    space_.persist(addr, len);
  }
  space_.atomic_store_u64(log_addr_ + kStateOff, kIdle);
  space_.persist(log_addr_ + kStateOff, 8);
}

void UndoLog::tx_begin() {
  if (depth_++ > 0) return;
  space_.atomic_store_u64(log_addr_ + kCountOff, 0);
  space_.persist(log_addr_ + kCountOff, 8);
  space_.atomic_store_u64(log_addr_ + kStateOff, kActive);
  space_.persist(log_addr_ + kStateOff, 8);
}

void UndoLog::tx_log(uint64_t addr, uint64_t length) {
  if (depth_ == 0)
    throw Error(Status::StateError, "tx_log outside transaction");
  if (length == 0 || length > kMaxEntryBytes)
    throw Error(Status::ParameterError, "tx_log length must be 1..64");

  uint64_t count = space_.load_u64(log_addr_ + kCountOff);
  if (count >= capacity_)
    throw Error(Status::LogFull, "undo log capacity exceeded");

  /* entry is durable before the covered range may be overwritten */
  std::byte entry[kEntrySize] = {};
  put_u64_le(entry, addr);
  put_u64_le(entry + 8, length);
  byte_span old = space_.read(addr, length);
  std::memcpy(entry + 16, old.data(), length);

  uint64_t entry_addr = log_addr_ + kEntriesBase + count * kEntrySize;
  space_.write(entry_addr, {entry, sizeof entry});
  space_.persist(entry_addr, sizeof entry);
  space_.atomic_store_u64(log_addr_ + kCountOff, count + 1);
  space_.persist(log_addr_ + kCountOff, 8);
}

void UndoLog::tx_commit() {
  if (depth_ == 0)
    throw Error(Status::StateError, "tx_commit without transaction");
  if (--depth_ > 0) return;

  uint64_t count = space_.load_u64(log_addr_ + kCountOff);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t entry = log_addr_ + kEntriesBase + i * kEntrySize;
    space_.persist(space_.load_u64(entry), space_.load_u64(entry + 8));
  }
  space_.atomic_store_u64(log_addr_ + kStateOff, kIdle);
  space_.persist(log_addr_ + kStateOff, 8);
}

}  // namespace akv::pmem
