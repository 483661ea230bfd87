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

#include "akv/cdp/plainkv.hpp"

#include <cstdio>

#include "akv/hash.hpp"

namespace akv::cdp {

namespace {
constexpr uint64_t kManifestMagic = 0x316d766b61ull; /* "akvm1" */
}

PlainKvVolume::PlainKvVolume(KvTransport& kv, std::string name)
    : kv_(kv), name_(std::move(name)) {}

std::string PlainKvVolume::record_key(uint64_t seq) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%020llu", (unsigned long long)seq);
  return name_ + "/r/" + buf;
}

std::string PlainKvVolume::manifest_key() const { return name_ + "/m"; }

Status PlainKvVolume::write_manifest() {
  Writer w;
  w.u64(kManifestMagic);
  w.u64(qcap_);
  w.u64(retention_);
  w.u64(mode_);
  w.u64(age_limit_);
  w.u64(trimmed_before_);
  w.u64(records_.empty() ? next_seq_ : records_.front().seq);
  w.u64(base_.size());
  for (const MapEntry& e : base_) {
    w.u64(e.virt);
    w.u64(e.len);
    w.u64(e.managed);
  }
  byte_buffer b = w.take();
  return kv_.put(manifest_key(), b);
}

Status PlainKvVolume::load() {
  loaded_ = true;
  initialized_ = false;
  records_.clear();
  base_.clear();
  auto m = kv_.get(manifest_key());
  if (m.status == Status::NotFound) return Status::Ok;
  if (!m.ok()) return m.status;

  Reader r(m.value);
  if (r.u64() != kManifestMagic) return Status::FormatError;
  qcap_ = r.u64();
  retention_ = r.u64();
  mode_ = r.u64();
  age_limit_ = r.u64();
  trimmed_before_ = r.u64();
  uint64_t first_seq = r.u64();
  uint64_t base_n = r.u64();
  for (uint64_t i = 0; i < base_n; ++i) {
    MapEntry e;
    e.virt = r.u64();
    e.len = r.u64();
    e.managed = r.u64();
    base_.push_back(e);
  }
  if (!r.ok() || r.remaining()) return Status::FormatError;

  /* records acknowledged after the last manifest write are found by
     probing forward; sequence numbers are gapless */
  next_seq_ = first_seq;
  for (;;) {
    auto v = kv_.get(record_key(next_seq_));
    if (v.status == Status::NotFound) break;
    if (!v.ok()) return v.status;
    if (v.value.size() != kRecordSize) return Status::FormatError;
    Record rec = decode_record(v.value.data());
    records_.push_back({rec.virt, rec.length, rec.managed, rec.timestamp,
                        rec.sequence});
    ++next_seq_;
  }
  last_ts_ = records_.empty() ? 0 : records_.back().ts;
  initialized_ = true;
  return Status::Ok;
}

Status PlainKvVolume::ensure_init(bool allow_init) {
  if (!loaded_) {
    Status s = load();
    if (s != Status::Ok) return s;
  }
  if (initialized_) return Status::Ok;
  if (!allow_init) return Status::VolumeNotFound;
  Status s = write_manifest();
  if (s != Status::Ok) return s;
  initialized_ = true;
  return Status::Ok;
}

Status PlainKvVolume::configure(uint64_t qcap, uint64_t retention,
                                uint64_t mode, uint64_t age_limit) {
  if (qcap < 2 || retention < 1) return Status::ParameterError;
  if (mode != kRetentionCount && mode != kRetentionAge)
    return Status::ParameterError;
  if (!loaded_) {
    Status s = load();
    if (s != Status::Ok) return s;
  }
  if (initialized_ && !records_.empty() && qcap != qcap_)
    return Status::StateError;
  qcap_ = qcap;
  retention_ = retention;
  mode_ = mode;
  age_limit_ = age_limit;
  Status s = write_manifest();
  if (s != Status::Ok) return s;
  initialized_ = true;
  return Status::Ok;
}

Result<uint64_t> PlainKvVolume::update(uint64_t virt, uint32_t len,
                                       uint64_t managed, uint64_t ts) {
  if (len == 0) return {Status::ParameterError, 0};
  Status s = ensure_init(true);
  if (s != Status::Ok) return {s, 0};
  if (ts < last_ts_) return {Status::OrderingViolation, 0};

  /* the in-store plugin does extra work at each quantum boundary; the
     baseline's analog is a manifest refresh (periodic traffic) */
  if (next_seq_ > 1 && (next_seq_ - 1) % qcap_ == 0) {
    s = write_manifest();
    if (s != Status::Ok) return {s, 0};
  }

  Record rec;
  rec.virt = virt;
  rec.length = len;
  rec.managed = managed;
  rec.timestamp = ts;
  rec.sequence = next_seq_;
  rec.valid = 1;
  std::byte img[kRecordSize];
  encode_record(img, rec);
  s = kv_.put(record_key(next_seq_), {img, kRecordSize});
  if (s != Status::Ok) return {s, 0};

  records_.push_back({virt, len, managed, ts, next_seq_});
  last_ts_ = ts;
  return {Status::Ok, next_seq_++};
}

Result<BlockMap> PlainKvVolume::query(uint64_t t) {
  Status s = ensure_init(false);
  if (s != Status::Ok) return {s, {}};
  if (t < trimmed_before_) return {Status::HistoryTrimmed, {}};
  BlockMap map = base_;
  for (const Rec& r : records_) {
    if (r.ts > t) break;
    merge_into(map, r.virt, r.len, r.managed);
  }
  return {Status::Ok, std::move(map)};
}

Result<BlockMap> PlainKvVolume::query(uint64_t t, uint64_t range_virt,
                                      uint64_t range_len) {
  auto full = query(t);
  if (!full.ok()) return full;
  return {Status::Ok, clip(full.value, range_virt, range_len)};
}

uint64_t PlainKvVolume::quantum_list_length() const {
  uint64_t r = records_.size();
  if (r == 0) return 1;
  return (r + qcap_ - 1) / qcap_;
}

Result<uint64_t> PlainKvVolume::trim(uint64_t now) {
  Status s = ensure_init(false);
  if (s != Status::Ok) return {s, 0};

  uint64_t trimmed = 0;
  for (;;) {
    uint64_t len = quantum_list_length();
    /* the quantum becoming head must be a full, summarized one; the
       open tail never qualifies */
    if (len < 3) break;
    if (mode_ == kRetentionCount) {
      if (len <= retention_ + 1) break;
    } else {
      uint64_t head_last = records_[qcap_ - 1].ts;
      if (head_last + age_limit_ >= now) break;
    }
    for (uint64_t i = 0; i < qcap_; ++i) {
      const Rec& r = records_[i];
      merge_into(base_, r.virt, r.len, r.managed);
      Status es = kv_.erase(record_key(r.seq));
      if (es != Status::Ok) return {es, trimmed};
    }
    trimmed_before_ = records_[qcap_].ts;
    records_.erase(records_.begin(), records_.begin() + long(qcap_));
    ++trimmed;
  }
  if (trimmed) {
    s = write_manifest();
    if (s != Status::Ok) return {s, trimmed};
  }
  return {Status::Ok, trimmed};
}

Result<uint64_t> PlainKvVolume::digest() {
  Status s = ensure_init(false);
  if (s != Status::Ok) return {s, 0};
  Digest d;
  d.u64(qcap_);
  d.u64(retention_);
  d.u64(mode_);
  d.u64(trimmed_before_);
  for (const Rec& r : records_) {
    d.u64(r.virt);
    d.u64(r.len);
    d.u64(r.managed);
    d.u64(r.ts);
    d.u64(r.seq);
  }
  return {Status::Ok, d.value()};
}

}  // namespace akv::cdp
