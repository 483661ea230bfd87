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

#include "akv/cdp/plugin.hpp"

#include "akv/hash.hpp"

namespace akv::cdp {

namespace {

/* quantum header field 48: summary of all trimmed history preceding this
   quantum's first record (transferred from a trimmed predecessor) */
constexpr uint64_t kQtBaseSummary = 48;

void st64(store::Pool& p, uint64_t addr, uint64_t v) {
  std::byte b[8];
  put_u64_le(b, v);
  p.write(addr, {b, 8});
}

uint64_t record_addr(uint64_t quantum, uint64_t slot) {
  return quantum + kQuantumHeaderSize + slot * kRecordSize;
}

/* Committed records form a prefix (each valid word is persisted before
   the next append starts), so the boundary can be found by bisection. */
uint64_t committed_count(store::Pool& p, uint64_t quantum) {
  uint64_t cap = p.load_u64(quantum + kQtCapacity);
  uint64_t lo = 0, hi = cap;
  while (lo < hi) {
    uint64_t mid = (lo + hi) / 2;
    if (p.load_u64(record_addr(quantum, mid) + kRecValid) == 1)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

Record read_record(store::Pool& p, uint64_t quantum, uint64_t slot) {
  return decode_record(p.read(record_addr(quantum, slot), kRecordSize).data());
}

/* first committed record's timestamp, or fallback when empty */
uint64_t first_ts(store::Pool& p, uint64_t quantum, uint64_t fallback) {
  if (committed_count(p, quantum) == 0) return fallback;
  return p.load_u64(record_addr(quantum, 0) + kRecTimestamp);
}

BlockMap read_summary(store::Pool& p, uint64_t blob) {
  BlockMap map;
  if (blob == 0) return map;
  if (p.load_u64(blob + kSmMagic) != kSummaryMagic)
    throw Error(Status::FormatError, "bad summary blob");
  uint64_t n = p.load_u64(blob + kSmCount);
  map.reserve(n);
  byte_span body = p.read(blob + kSummaryHeaderSize, n * kSummaryEntrySize);
  for (uint64_t i = 0; i < n; ++i) {
    const std::byte* e = body.data() + i * kSummaryEntrySize;
    map.push_back({get_u64_le(e), get_u64_le(e + 8), get_u64_le(e + 16)});
  }
  return map;
}

/* Base map for merging a quantum's records: the strictly preceding
   SUMMARIZED quantum's summary, or the head's inherited base summary of
   trimmed history. */
BlockMap base_map_before(store::Pool& p, uint64_t quantum) {
  uint64_t q = p.load_u64(quantum + kQtPrev);
  while (q) {
    if (p.load_u64(q + kQtState) == kStateSummarized)
      return read_summary(p, p.load_u64(q + kQtSummary));
    quantum = q;
    q = p.load_u64(q + kQtPrev);
  }
  return read_summary(p, p.load_u64(quantum + kQtBaseSummary));
}

/* Merge committed records of quanta in (after, upto] time order into
   map; `after` may equal the summarized quantum the map came from. */
void merge_range(store::Pool& p, BlockMap& map, uint64_t from, uint64_t upto,
                 uint64_t t_limit) {
  for (uint64_t q = from; q; q = p.load_u64(q + kQtNext)) {
    uint64_t n = committed_count(p, q);
    for (uint64_t i = 0; i < n; ++i) {
      Record r = read_record(p, q, i);
      if (q == upto && r.timestamp > t_limit) return;
      merge_into(map, r.virt, r.length, r.managed);
    }
    if (q == upto) return;
  }
}

}  // namespace

Status CdpPlugin::init_volume(ado::Callbacks& cb, uint64_t root, uint64_t qcap,
                              uint64_t retention, uint64_t mode,
                              uint64_t age_limit) {
  if (qcap < 2 || retention < 1) return Status::ParameterError;
  auto q = alloc_quantum(cb, qcap, 0);
  if (!q.ok()) return q.status;
  store::Pool& p = cb.pool();
  p.tx_begin();
  p.tx_log(root, kVolumeRootSize);
  st64(p, root + kVrMagic, kVolumeMagic);
  st64(p, root + kVrHead, q.value);
  st64(p, root + kVrTail, q.value);
  st64(p, root + kVrTrimmedBefore, 0);
  st64(p, root + kVrQuantumCapacity, qcap);
  st64(p, root + kVrRetention, retention);
  st64(p, root + kVrRetentionMode, mode);
  st64(p, root + kVrAgeLimit, age_limit);
  p.tx_commit();
  return Status::Ok;
}

Result<uint64_t> CdpPlugin::alloc_quantum(ado::Callbacks& cb, uint64_t qcap,
                                          uint64_t prev) {
  uint64_t bytes = kQuantumHeaderSize + qcap * kRecordSize;
  auto a = cb.allocate_pool_memory(bytes, 64);
  if (!a.ok()) return a;
  store::Pool& p = cb.pool();
  /* fresh extent: valid words must read zero */
  p.fill_zero(a.value, bytes);
  st64(p, a.value + kQtMagic, kQuantumMagic);
  st64(p, a.value + kQtCapacity, qcap);
  st64(p, a.value + kQtPrev, prev);
  st64(p, a.value + kQtNext, 0);
  st64(p, a.value + kQtSummary, 0);
  st64(p, a.value + kQtState, kStateOpen);
  st64(p, a.value + kQtBaseSummary, 0);
  p.persist(a.value, bytes);
  return a;
}

void CdpPlugin::recover_volume(ado::Callbacks& cb, uint64_t root,
                               VolumeState& vs) {
  store::Pool& p = cb.pool();
  uint64_t tail = p.load_u64(root + kVrTail);

  /* a crash between linking a fresh tail and sealing its predecessor
     leaves a full non-tail quantum still OPEN; seal it now */
  std::vector<uint64_t> to_summarize;
  for (uint64_t q = p.load_u64(root + kVrHead); q;
       q = p.load_u64(q + kQtNext)) {
    if (p.load_u64(q + kQtMagic) != kQuantumMagic)
      throw Error(Status::FormatError, "bad quantum header");
    uint64_t state = p.load_u64(q + kQtState);
    if (q != tail && state == kStateOpen) {
      p.atomic_store_u64(q + kQtState, kStateSealed);
      p.persist(q + kQtState, 8);
      state = kStateSealed;
    }
    if (state == kStateSealed) to_summarize.push_back(q);
    uint64_t n = committed_count(p, q);
    for (uint64_t i = 0; i < n; ++i) {
      Record r = read_record(p, q, i);
      if (r.sequence >= vs.next_seq) vs.next_seq = r.sequence + 1;
      if (r.timestamp > vs.last_ts) vs.last_ts = r.timestamp;
    }
    if (q == tail) vs.open_count = n;
  }
  for (uint64_t q : to_summarize)
    cb.defer([this, &cb, root, q] { summarize(cb, root, q); });
  vs.recovered = true;
}

Status CdpPlugin::ensure_volume(ado::Callbacks& cb, const std::string& key,
                                uint64_t root, VolumeState*& vs,
                                bool allow_init) {
  store::Pool& p = cb.pool();
  VolumeState& state = volumes_[key];
  vs = &state;
  if (p.load_u64(root + kVrMagic) != kVolumeMagic) {
    if (!allow_init) return Status::VolumeNotFound;
    Status s = init_volume(cb, root, kDefaultQuantumCapacity,
                           kDefaultRetention, kRetentionCount, 0);
    if (s != Status::Ok) return s;
    state = VolumeState{};
    state.recovered = true;
    return Status::Ok;
  }
  if (!state.recovered) recover_volume(cb, root, state);
  return Status::Ok;
}

Status CdpPlugin::seal_and_link(ado::Callbacks& cb, uint64_t root,
                                VolumeState& vs) {
  store::Pool& p = cb.pool();
  uint64_t old_tail = p.load_u64(root + kVrTail);
  uint64_t qcap = p.load_u64(root + kVrQuantumCapacity);
  auto q = alloc_quantum(cb, qcap, old_tail);
  if (!q.ok()) return q.status;
  p.tx_begin();
  p.tx_log(old_tail + kQtNext, 8);
  p.tx_log(root + kVrTail, 8);
  st64(p, old_tail + kQtNext, q.value);
  st64(p, root + kVrTail, q.value);
  p.tx_commit();
  p.atomic_store_u64(old_tail + kQtState, kStateSealed);
  p.persist(old_tail + kQtState, 8);
  vs.open_count = 0;
  cb.defer([this, &cb, root, old_tail] { summarize(cb, root, old_tail); });
  return Status::Ok;
}

void CdpPlugin::summarize(ado::Callbacks& cb, uint64_t root, uint64_t quantum) {
  store::Pool& p = cb.pool();
  if (p.load_u64(quantum + kQtState) != kStateSealed) return;

  /* predecessors first: summaries build on each other */
  uint64_t prev = p.load_u64(quantum + kQtPrev);
  if (prev && p.load_u64(prev + kQtState) == kStateSealed) {
    summarize(cb, root, prev);
    if (p.load_u64(prev + kQtState) != kStateSummarized) return;
  }

  /* built in DRAM, then transactionally copied into pool memory */
  BlockMap map = base_map_before(p, quantum);
  uint64_t n = committed_count(p, quantum);
  uint64_t as_of_t = 0, as_of_s = 0;
  for (uint64_t i = 0; i < n; ++i) {
    Record r = read_record(p, quantum, i);
    merge_into(map, r.virt, r.length, r.managed);
    as_of_t = r.timestamp;
    as_of_s = r.sequence;
  }

  /* an interrupted prior run may have left a committed blob pointer */
  uint64_t stale = p.load_u64(quantum + kQtSummary);

  uint64_t bytes = kSummaryHeaderSize + map.size() * kSummaryEntrySize;
  auto blob = cb.allocate_pool_memory(bytes, 8);
  if (!blob.ok()) return; /* stays SEALED; retried on next recovery */
  byte_buffer image(static_cast<size_t>(bytes));
  put_u64_le(image.data() + kSmMagic, kSummaryMagic);
  put_u64_le(image.data() + kSmCount, map.size());
  put_u64_le(image.data() + kSmAsOfTime, as_of_t);
  put_u64_le(image.data() + kSmAsOfSeq, as_of_s);
  for (size_t i = 0; i < map.size(); ++i) {
    std::byte* e = image.data() + kSummaryHeaderSize + i * kSummaryEntrySize;
    put_u64_le(e, map[i].virt);
    put_u64_le(e + 8, map[i].len);
    put_u64_le(e + 16, map[i].managed);
  }
  p.write(blob.value, image);
  p.persist(blob.value, bytes);

  p.tx_begin();
  p.tx_log(quantum + kQtSummary, 8);
  st64(p, quantum + kQtSummary, blob.value);
  if (stale) cb.free_pool_memory(stale);
  p.tx_commit();
  p.atomic_store_u64(quantum + kQtState, kStateSummarized);
  p.persist(quantum + kQtState, 8);
}

Status CdpPlugin::op_update(ado::Callbacks& cb, const ado::WorkRequest& w,
                            byte_span body, std::vector<byte_buffer>& out) {
  Reader r(body);
  uint64_t virt = r.u64();
  uint32_t len = r.u32();
  uint64_t managed = r.u64();
  uint64_t ts = r.u64();
  if (!r.ok() || r.remaining() || len == 0) return Status::ParameterError;

  uint64_t root = w.values[0].addr;
  VolumeState* vs = nullptr;
  Status s = ensure_volume(cb, w.key, root, vs, true);
  if (s != Status::Ok) return s;
  if (ts < vs->last_ts) return Status::OrderingViolation;

  store::Pool& p = cb.pool();
  if (vs->open_count >= p.load_u64(root + kVrQuantumCapacity)) {
    s = seal_and_link(cb, root, *vs);
    if (s != Status::Ok) return s;
  }
  uint64_t tail = p.load_u64(root + kVrTail);
  uint64_t slot = record_addr(tail, vs->open_count);

  Record rec;
  rec.virt = virt;
  rec.length = len;
  rec.managed = managed;
  rec.timestamp = ts;
  rec.sequence = vs->next_seq;
  rec.valid = 0;
  std::byte img[kRecordSize];
  encode_record(img, rec);
  p.write(slot, {img, kRecordSize});
  p.persist(slot, kRecordSize);
  p.atomic_store_u64(slot + kRecValid, 1); /* commit point */
  p.persist(slot + kRecValid, 8);

  ++vs->open_count;
  vs->last_ts = ts;
  Writer resp;
  resp.u64(vs->next_seq++);
  out.push_back(resp.take());
  return Status::Ok;
}

Status CdpPlugin::op_query(ado::Callbacks& cb, const ado::WorkRequest& w,
                           byte_span body, std::vector<byte_buffer>& out) {
  Reader rd(body);
  uint64_t t = rd.u64();
  bool full = rd.u8() != 0;
  uint64_t range_virt = rd.u64();
  uint64_t range_len = rd.u64();
  if (!rd.ok() || rd.remaining()) return Status::ParameterError;

  uint64_t root = w.values[0].addr;
  VolumeState* vs = nullptr;
  Status s = ensure_volume(cb, w.key, root, vs, false);
  if (s != Status::Ok) return s;

  store::Pool& p = cb.pool();
  if (t < p.load_u64(root + kVrTrimmedBefore)) return Status::HistoryTrimmed;

  /* (1) newest-first: the latest quantum starting at or before t */
  uint64_t q_t = 0;
  for (uint64_t q = p.load_u64(root + kVrTail); q;
       q = p.load_u64(q + kQtPrev)) {
    if (committed_count(p, q) == 0) continue;
    if (first_ts(p, q, ~0ull) <= t) {
      q_t = q;
      break;
    }
  }
  BlockMap map;
  if (q_t) {
    /* (2) nearest summarized strict predecessor (or trimmed-history
       base); (3) merge whole quanta after it; (4) records of Q_t while
       their time is within t */
    map = base_map_before(p, q_t);
    uint64_t start = q_t;
    for (uint64_t q = p.load_u64(q_t + kQtPrev); q;
         q = p.load_u64(q + kQtPrev)) {
      if (p.load_u64(q + kQtState) == kStateSummarized) break;
      start = q;
    }
    merge_range(p, map, start, q_t, t);
  }
  if (!full) map = clip(map, range_virt, range_len);
  out.push_back(encode_block_map(map));
  return Status::Ok;
}

Status CdpPlugin::op_trim(ado::Callbacks& cb, const ado::WorkRequest& w,
                          byte_span body, std::vector<byte_buffer>& out) {
  Reader rd(body);
  uint64_t now = rd.u64();
  if (!rd.ok() || rd.remaining()) return Status::ParameterError;

  uint64_t root = w.values[0].addr;
  VolumeState* vs = nullptr;
  Status s = ensure_volume(cb, w.key, root, vs, false);
  if (s != Status::Ok) return s;

  store::Pool& p = cb.pool();
  uint64_t mode = p.load_u64(root + kVrRetentionMode);
  uint64_t retention = p.load_u64(root + kVrRetention);
  uint64_t age_limit = p.load_u64(root + kVrAgeLimit);

  uint64_t trimmed = 0;
  for (;;) {
    uint64_t head = p.load_u64(root + kVrHead);
    uint64_t tail = p.load_u64(root + kVrTail);
    if (head == tail) break; /* never trim the OPEN quantum */
    uint64_t next = p.load_u64(head + kQtNext);
    /* query completeness: the new head must already be summarized */
    if (p.load_u64(next + kQtState) != kStateSummarized) break;

    if (mode == kRetentionCount) {
      uint64_t list_len = 0;
      for (uint64_t q = head; q; q = p.load_u64(q + kQtNext)) ++list_len;
      if (list_len <= retention + 1) break;
    } else {
      uint64_t n = committed_count(p, head);
      uint64_t last_ts =
          n ? p.load_u64(record_addr(head, n - 1) + kRecTimestamp) : 0;
      if (last_ts + age_limit >= now) break;
    }

    uint64_t nh_first = first_ts(p, next, p.load_u64(root + kVrTrimmedBefore));
    uint64_t head_summary = p.load_u64(head + kQtSummary);
    uint64_t head_base = p.load_u64(head + kQtBaseSummary);
    uint64_t next_base = p.load_u64(next + kQtBaseSummary);

    p.tx_begin();
    p.tx_log(root + kVrHead, 8);
    p.tx_log(root + kVrTrimmedBefore, 8);
    p.tx_log(next + kQtPrev, 8);
    p.tx_log(next + kQtBaseSummary, 8);
    st64(p, root + kVrHead, next);
    st64(p, root + kVrTrimmedBefore, nh_first);
    st64(p, next + kQtPrev, 0);
    /* the trimmed quantum's summary becomes the new head's base: it
       carries the effect of all history before the new head */
    st64(p, next + kQtBaseSummary, head_summary);
    if (next_base) cb.free_pool_memory(next_base);
    if (head_base) cb.free_pool_memory(head_base);
    cb.free_pool_memory(head);
    p.tx_commit();
    ++trimmed;
  }
  Writer resp;
  resp.u64(trimmed);
  out.push_back(resp.take());
  return Status::Ok;
}

Status CdpPlugin::op_configure(ado::Callbacks& cb, const ado::WorkRequest& w,
                               byte_span body, std::vector<byte_buffer>&) {
  Reader rd(body);
  uint64_t qcap = rd.u64();
  uint64_t retention = rd.u64();
  uint64_t mode = rd.u64();
  uint64_t age_limit = rd.u64();
  if (!rd.ok() || rd.remaining()) return Status::ParameterError;
  if (mode != kRetentionCount && mode != kRetentionAge)
    return Status::ParameterError;

  uint64_t root = w.values[0].addr;
  store::Pool& p = cb.pool();
  if (p.load_u64(root + kVrMagic) != kVolumeMagic) {
    Status s = init_volume(cb, root, qcap, retention, mode, age_limit);
    if (s == Status::Ok) {
      volumes_[w.key] = VolumeState{};
      volumes_[w.key].recovered = true;
    }
    return s;
  }
  /* existing volume: retention policy may change, quantum geometry
     cannot once records exist */
  VolumeState* vs = nullptr;
  Status s = ensure_volume(cb, w.key, root, vs, false);
  if (s != Status::Ok) return s;
  uint64_t head = p.load_u64(root + kVrHead);
  bool empty = head == p.load_u64(root + kVrTail) &&
               committed_count(p, head) == 0;
  if (!empty && qcap != p.load_u64(root + kVrQuantumCapacity))
    return Status::StateError;
  p.tx_begin();
  p.tx_log(root + kVrRetention, 24);
  st64(p, root + kVrRetention, retention);
  st64(p, root + kVrRetentionMode, mode);
  st64(p, root + kVrAgeLimit, age_limit);
  p.tx_commit();
  return Status::Ok;
}

Status CdpPlugin::op_digest(ado::Callbacks& cb, const ado::WorkRequest& w,
                            std::vector<byte_buffer>& out) {
  uint64_t root = w.values[0].addr;
  VolumeState* vs = nullptr;
  Status s = ensure_volume(cb, w.key, root, vs, false);
  if (s != Status::Ok) return s;

  /* digest of the committed logical state only: summarization progress
     must not affect it (lazy vs eager transparency) */
  store::Pool& p = cb.pool();
  Digest d;
  d.u64(p.load_u64(root + kVrQuantumCapacity));
  d.u64(p.load_u64(root + kVrRetention));
  d.u64(p.load_u64(root + kVrRetentionMode));
  d.u64(p.load_u64(root + kVrTrimmedBefore));
  for (uint64_t q = p.load_u64(root + kVrHead); q;
       q = p.load_u64(q + kQtNext)) {
    uint64_t n = committed_count(p, q);
    for (uint64_t i = 0; i < n; ++i) {
      Record r = read_record(p, q, i);
      d.u64(r.virt);
      d.u64(r.length);
      d.u64(r.managed);
      d.u64(r.timestamp);
      d.u64(r.sequence);
    }
  }
  Writer resp;
  resp.u64(d.value());
  out.push_back(resp.take());
  return Status::Ok;
}

Status CdpPlugin::do_work(ado::Callbacks& cb, const ado::WorkRequest& w,
                          std::vector<byte_buffer>& responses) {
  if (w.values.empty() || w.values[0].len != kVolumeRootSize)
    return Status::FormatError;
  Reader rd(w.request);
  uint8_t tag = rd.u8();
  if (!rd.ok()) return Status::ParameterError;
  byte_span body = w.request.subspan(1);
  switch (CdpTag(tag)) {
    case CdpTag::Update:
      return op_update(cb, w, body, responses);
    case CdpTag::Query:
      return op_query(cb, w, body, responses);
    case CdpTag::Trim:
      return op_trim(cb, w, body, responses);
    case CdpTag::Configure:
      return op_configure(cb, w, body, responses);
    case CdpTag::Digest:
      return op_digest(cb, w, responses);
  }
  return Status::PluginError;
}

namespace {
ado::PluginRegistration reg_cdp(kCdpPluginId,
                                [] { return std::make_shared<CdpPlugin>(); });
}

}  // namespace akv::cdp
