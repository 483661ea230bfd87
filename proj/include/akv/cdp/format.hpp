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

#ifndef AKV_CDP_FORMAT_HPP
#define AKV_CDP_FORMAT_HPP

#include <cstdint>
#include <vector>

#include "akv/bytes.hpp"

namespace akv::cdp {

/* One mapping record: virtual block range -> managed block range, stamped
   with (timestamp, sequence). Exactly one cache line. The valid word is
   written last with an atomic 8-byte store; it is the commit point of an
   append. */
struct Record {
  uint64_t virt = 0;      /* first virtual block */
  uint32_t length = 0;    /* blocks, >= 1 */
  uint32_t reserved = 0;
  uint64_t managed = 0;   /* first managed block */
  uint64_t timestamp = 0; /* nanoseconds */
  uint64_t sequence = 0;  /* per-volume monotone tie breaker */
  uint64_t valid = 0;     /* 0 = empty slot, 1 = committed */
  uint64_t pad0 = 0;
  uint64_t pad1 = 0;
};
static_assert(sizeof(Record) == 64, "mapping record must be one cache line");

constexpr uint64_t kRecordSize = 64;

/* field offsets within a serialized record */
constexpr uint64_t kRecVirt = 0;
constexpr uint64_t kRecLength = 8;
constexpr uint64_t kRecReserved = 12;
constexpr uint64_t kRecManaged = 16;
constexpr uint64_t kRecTimestamp = 24;
constexpr uint64_t kRecSequence = 32;
constexpr uint64_t kRecValid = 40;

inline void encode_record(std::byte* p, const Record& r) {
  put_u64_le(p + kRecVirt, r.virt);
  put_u32_le(p + kRecLength, r.length);
  put_u32_le(p + kRecReserved, 0);
  put_u64_le(p + kRecManaged, r.managed);
  put_u64_le(p + kRecTimestamp, r.timestamp);
  put_u64_le(p + kRecSequence, r.sequence);
  put_u64_le(p + kRecValid, r.valid);
  put_u64_le(p + 48, 0);
  put_u64_le(p + 56, 0);
}

inline Record decode_record(const std::byte* p) {
  Record r;
  r.virt = get_u64_le(p + kRecVirt);
  r.length = get_u32_le(p + kRecLength);
  r.managed = get_u64_le(p + kRecManaged);
  r.timestamp = get_u64_le(p + kRecTimestamp);
  r.sequence = get_u64_le(p + kRecSequence);
  r.valid = get_u64_le(p + kRecValid);
  return r;
}

/* Quantum sizing: capacity in records for a byte budget. 4 MiB holds
   65,536 records and 16 MiB holds 262,144. */
constexpr uint64_t records_per_quantum(uint64_t quantum_bytes) {
  return quantum_bytes / kRecordSize;
}
static_assert(records_per_quantum(4ull << 20) == 65536);
static_assert(records_per_quantum(16ull << 20) == 262144);

/* quantum header (64 bytes, followed by capacity * 64-byte slots) */
constexpr uint64_t kQuantumMagic = 0x3171766b61ull; /* "akvq1" */
constexpr uint64_t kQtMagic = 0;
constexpr uint64_t kQtCapacity = 8;
constexpr uint64_t kQtPrev = 16;
constexpr uint64_t kQtNext = 24;
constexpr uint64_t kQtSummary = 32;
constexpr uint64_t kQtState = 40;
constexpr uint64_t kQuantumHeaderSize = 64;

constexpr uint64_t kStateOpen = 1;
constexpr uint64_t kStateSealed = 2;
constexpr uint64_t kStateSummarized = 3;

/* volume root: the KV pair's 64-byte value */
constexpr uint64_t kVolumeMagic = 0x3176766b61ull; /* "akvv1" */
constexpr uint64_t kVrMagic = 0;
constexpr uint64_t kVrHead = 8;
constexpr uint64_t kVrTail = 16;
constexpr uint64_t kVrTrimmedBefore = 24;
constexpr uint64_t kVrQuantumCapacity = 32;
constexpr uint64_t kVrRetention = 40;
constexpr uint64_t kVrRetentionMode = 48;
constexpr uint64_t kVrAgeLimit = 56;
constexpr uint64_t kVolumeRootSize = 64;

constexpr uint64_t kRetentionCount = 0;
constexpr uint64_t kRetentionAge = 1;

constexpr uint64_t kDefaultQuantumCapacity = 65536;
constexpr uint64_t kDefaultRetention = 10;

/* durable summary blob: header + count * 24-byte entries */
constexpr uint64_t kSummaryMagic = 0x3173766b61ull; /* "akvs1" */
constexpr uint64_t kSmMagic = 0;
constexpr uint64_t kSmCount = 8;
constexpr uint64_t kSmAsOfTime = 16;
constexpr uint64_t kSmAsOfSeq = 24;
constexpr uint64_t kSummaryHeaderSize = 32;
constexpr uint64_t kSummaryEntrySize = 24;

/* plugin request encoding: tag byte, then fixed-width LE fields */
enum class CdpTag : uint8_t {
  Update = 1,    /* u64 virt, u32 len, u64 managed, u64 ts -> u64 seq */
  Query = 2,     /* u64 t, u8 full, u64 range_virt, u64 range_len
                    -> u32 count, count * {u64 virt,u64 len,u64 managed} */
  Trim = 3,      /* u64 now -> u64 trimmed count */
  Configure = 4, /* u64 qcap, u64 retention, u64 mode, u64 age_limit */
  Digest = 5,    /* -> u64 digest over committed logical state */
};

/* A materialized mapping: sorted by virt, non-overlapping, adjacent
   managed-contiguous entries coalesced into maximal runs. */
struct MapEntry {
  uint64_t virt = 0;
  uint64_t len = 0;
  uint64_t managed = 0;
  bool operator==(const MapEntry&) const = default;
};
using BlockMap = std::vector<MapEntry>;

/* Apply one write: the new range supersedes overlapped portions of
   older entries; partial overlaps split with linear managed-offset
   adjustment. */
void merge_into(BlockMap& map, uint64_t virt, uint64_t len, uint64_t managed);

/* Restrict to [virt, virt+len); partial overlaps clipped linearly. */
BlockMap clip(const BlockMap& map, uint64_t virt, uint64_t len);

/* request builders / parsers shared by clients, plugin, and tests */
byte_buffer encode_update(uint64_t virt, uint32_t len, uint64_t managed,
                          uint64_t ts);
byte_buffer encode_query(uint64_t t);
byte_buffer encode_query(uint64_t t, uint64_t range_virt, uint64_t range_len);
byte_buffer encode_trim(uint64_t now);
byte_buffer encode_configure(uint64_t qcap, uint64_t retention, uint64_t mode,
                             uint64_t age_limit);
byte_buffer encode_digest();

/* QUERY response payload */
byte_buffer encode_block_map(const BlockMap& map);
bool decode_block_map(byte_span body, BlockMap& out);

}  // namespace akv::cdp

#endif
