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

#include <doctest.h>

#include <filesystem>
#include <memory>

#include "../support/temp_dir.hpp"
#include "akv/cdp/plugin.hpp"
#include "akv/hash.hpp"
#include "akv/store/shard.hpp"

using namespace akv;
using namespace akv::cdp;
using namespace akv::store;
using akv::testing::TempDir;

namespace {

constexpr uint64_t kNoBlock = ~0ull;

/* Independent oracle: a plain array with one managed address per virtual
   block. Updates replay in issue order (timestamps are monotone and
   sequence numbers break ties); the map at time t is the maximal-run
   extraction over all updates with timestamp <= t. */
struct Upd {
  uint64_t virt = 0;
  uint32_t len = 0;
  uint64_t managed = 0;
  uint64_t ts = 0;
};

BlockMap oracle_map(const std::vector<Upd>& history, size_t n_applied,
                    uint64_t t, uint64_t blocks) {
  std::vector<uint64_t> arr(blocks, kNoBlock);
  for (size_t i = 0; i < n_applied; ++i) {
    const Upd& u = history[i];
    if (u.ts > t) break;
    for (uint64_t b = 0; b < u.len; ++b) arr[u.virt + b] = u.managed + b;
  }
  BlockMap out;
  for (uint64_t i = 0; i < blocks; ++i) {
    if (arr[i] == kNoBlock) continue;
    uint64_t start = i, managed = arr[i], len = 1;
    while (i + 1 < blocks && arr[i + 1] != kNoBlock &&
           arr[i + 1] == arr[i] + 1) {
      ++i;
      ++len;
    }
    out.push_back({start, len, managed});
  }
  return out;
}

ShardConfig cdp_cfg(const std::string& dir) {
  ShardConfig c;
  c.data_dir = dir;
  c.plugins = {kCdpPluginId};
  c.synchronous_ado = true;
  c.pool_options.initial_size = 8 << 20;
  c.pool_options.expansion_size = 8 << 20;
  c.pool_options.simulate = true;
  return c;
}

const std::string kPool = "p";
const std::string kVol = "vol";

Result<uint64_t> vol_update(Shard& s, uint64_t virt, uint32_t len,
                            uint64_t managed, uint64_t ts) {
  byte_buffer req = encode_update(virt, len, managed, ts);
  auto r = s.invoke_ado_sync(kPool, as_bytes(kVol), req,
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, 0};
  REQUIRE(r.value.size() == 1);
  REQUIRE(r.value[0].size() == 8);
  return {Status::Ok, get_u64_le(r.value[0].data())};
}

Result<BlockMap> vol_query(Shard& s, byte_buffer req) {
  auto r = s.invoke_ado_sync(kPool, as_bytes(kVol), req,
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, {}};
  REQUIRE(r.value.size() == 1);
  BlockMap map;
  REQUIRE(decode_block_map(r.value[0], map));
  return {Status::Ok, std::move(map)};
}

Result<uint64_t> vol_u64_op(Shard& s, byte_buffer req) {
  auto r = s.invoke_ado_sync(kPool, as_bytes(kVol), req,
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, 0};
  REQUIRE(r.value.size() == 1);
  REQUIRE(r.value[0].size() == 8);
  return {Status::Ok, get_u64_le(r.value[0].data())};
}

Status vol_configure(Shard& s, uint64_t qcap, uint64_t retention,
                     uint64_t mode, uint64_t age_limit) {
  byte_buffer req = encode_configure(qcap, retention, mode, age_limit);
  return s
      .invoke_ado_sync(kPool, as_bytes(kVol), req, kInvokeCreateIfMissing,
                       kVolumeRootSize)
      .status;
}

/* Walk the on-pool quantum list through the shard's debug hooks. */
struct VolView {
  uint64_t root = 0;
  uint64_t trimmed_before = 0;
  std::vector<uint64_t> quanta;
  std::vector<uint64_t> states;
};

VolView vol_view(Shard& s) {
  VolView v;
  Pool* p = s.debug_pool(kPool);
  auto* t = s.debug_table(kPool);
  REQUIRE(p != nullptr);
  REQUIRE(t != nullptr);
  auto e = t->find_entry(as_bytes(kVol));
  REQUIRE(e.ok());
  v.root = t->entry_value(e.value).addr;
  v.trimmed_before = p->load_u64(v.root + kVrTrimmedBefore);
  for (uint64_t q = p->load_u64(v.root + kVrHead); q;
       q = p->load_u64(q + kQtNext)) {
    v.quanta.push_back(q);
    v.states.push_back(p->load_u64(q + kQtState));
  }
  return v;
}

}  // namespace

TEST_CASE("record layout and quantum sizing are fixed") {
  CHECK(sizeof(Record) == 64);
  CHECK(kRecordSize == 64);
  CHECK(records_per_quantum(4ull << 20) == 65536);
  CHECK(records_per_quantum(16ull << 20) == 262144);

  Record r;
  r.virt = 0x1122334455667788ull;
  r.length = 0x99aabbcc;
  r.managed = 7;
  r.timestamp = 1234567;
  r.sequence = 42;
  r.valid = 1;
  std::byte img[kRecordSize];
  encode_record(img, r);
  Record d = decode_record(img);
  CHECK(d.virt == r.virt);
  CHECK(d.length == r.length);
  CHECK(d.managed == r.managed);
  CHECK(d.timestamp == r.timestamp);
  CHECK(d.sequence == r.sequence);
  CHECK(d.valid == 1);
  /* the valid word sits on its own 8-byte slot so a single atomic store
     commits the record */
  CHECK(kRecValid % 8 == 0);
}

TEST_CASE("merge splits overlapped runs with linear managed adjustment") {
  BlockMap m;
  merge_into(m, 0, 10, 0);
  merge_into(m, 5, 3, 100);
  BlockMap want = {{0, 5, 0}, {5, 3, 100}, {8, 2, 8}};
  CHECK(m == want);

  /* full cover collapses to one run */
  merge_into(m, 0, 10, 50);
  want = {{0, 10, 50}};
  CHECK(m == want);

  /* adjacent contiguous writes coalesce into a maximal run */
  BlockMap c;
  merge_into(c, 0, 4, 100);
  merge_into(c, 4, 4, 104);
  want = {{0, 8, 100}};
  CHECK(c == want);

  /* rewriting the middle of a run splits it back apart */
  merge_into(c, 2, 2, 200);
  want = {{0, 2, 100}, {2, 2, 200}, {4, 4, 104}};
  CHECK(c == want);

  /* a write bridging a gap merges with both neighbors */
  BlockMap g;
  merge_into(g, 0, 2, 10);
  merge_into(g, 6, 2, 16);
  merge_into(g, 2, 4, 12);
  want = {{0, 8, 10}};
  CHECK(g == want);
}

TEST_CASE("merge kernel matches a per-block replay") {
  constexpr uint64_t kBlocks = 1024;
  SplitMix64 rng(0xc0ffee);
  for (int round = 0; round < 40; ++round) {
    BlockMap m;
    std::vector<Upd> hist;
    uint64_t ts = 0;
    for (int i = 0; i < 120; ++i) {
      Upd u;
      u.len = uint32_t(rng.next_range(1, 64));
      u.virt = rng.next_below(kBlocks - u.len);
      u.managed = rng.next_below(1ull << 30);
      u.ts = ++ts;
      /* sometimes continue the previous run to exercise coalescing */
      if (!hist.empty() && rng.next_below(10) < 3) {
        const Upd& p = hist.back();
        if (p.virt + p.len + u.len <= kBlocks) {
          u.virt = p.virt + p.len;
          u.managed = p.managed + p.len;
        }
      }
      merge_into(m, u.virt, u.len, u.managed);
      hist.push_back(u);
      CHECK(m == oracle_map(hist, hist.size(), ts, kBlocks));
    }
  }
}

TEST_CASE("clip restricts a map linearly") {
  BlockMap m = {{0, 5, 0}, {5, 3, 100}, {8, 2, 8}, {20, 4, 50}};
  BlockMap want = {{3, 2, 3}, {5, 3, 100}, {8, 1, 8}};
  CHECK(clip(m, 3, 6) == want);
  CHECK(clip(m, 12, 8).empty());
  CHECK(clip(m, 0, 64) == m);
  want = {{21, 2, 51}};
  CHECK(clip(m, 21, 2) == want);
}

TEST_CASE("volume initialization and sequence discipline") {
  TempDir td;
  Shard s(cdp_cfg(td.path()));
  REQUIRE(s.pool_create(kPool, 0) == Status::Ok);

  /* a fresh (zeroed) root is not a volume until written or configured */
  CHECK(vol_query(s, encode_query(100)).status == Status::VolumeNotFound);

  auto u1 = vol_update(s, 0, 4, 100, 10);
  REQUIRE(u1.ok());
  CHECK(u1.value == 1);
  auto u2 = vol_update(s, 4, 4, 104, 10); /* equal timestamps are legal */
  REQUIRE(u2.ok());
  CHECK(u2.value == 2);
  CHECK(vol_update(s, 0, 1, 0, 9).status == Status::OrderingViolation);
  CHECK(vol_update(s, 0, 0, 0, 11).status == Status::ParameterError);

  auto q = vol_query(s, encode_query(10));
  REQUIRE(q.ok());
  BlockMap want = {{0, 8, 100}};
  CHECK(q.value == want);
  q = vol_query(s, encode_query(9));
  REQUIRE(q.ok());
  CHECK(q.value.empty());

  /* retention policy may change; quantum geometry cannot once records
     exist */
  CHECK(vol_configure(s, kDefaultQuantumCapacity, 5, kRetentionCount, 0) ==
        Status::Ok);
  CHECK(vol_configure(s, 128, 5, kRetentionCount, 0) == Status::StateError);
  CHECK(vol_configure(s, kDefaultQuantumCapacity, 5, 7, 0) ==
        Status::ParameterError);
}

TEST_CASE("appends seal full quanta and only full quanta") {
  TempDir td;
  Shard s(cdp_cfg(td.path()));
  REQUIRE(s.pool_create(kPool, 0) == Status::Ok);
  REQUIRE(vol_configure(s, 4, 10, kRetentionCount, 0) == Status::Ok);

  for (uint64_t i = 0; i < 4; ++i)
    REQUIRE(vol_update(s, i, 1, 100 + i, i + 1).ok());
  VolView v = vol_view(s);
  CHECK(v.quanta.size() == 1); /* sealing is lazy: on the next append */

  REQUIRE(vol_update(s, 4, 1, 104, 5).ok());
  v = vol_view(s);
  REQUIRE(v.quanta.size() == 2);
  CHECK(v.states[0] == kStateSummarized); /* synchronous mode drains defers */
  CHECK(v.states[1] == kStateOpen);

  for (uint64_t i = 5; i < 13; ++i)
    REQUIRE(vol_update(s, i, 1, 100 + i, i + 1).ok());
  v = vol_view(s);
  REQUIRE(v.quanta.size() == 4);
  for (size_t i = 0; i + 1 < v.quanta.size(); ++i)
    CHECK(v.states[i] == kStateSummarized);
  CHECK(v.states.back() == kStateOpen);

  /* a query through summarized history equals a fresh replay */
  auto q = vol_query(s, encode_query(7));
  REQUIRE(q.ok());
  std::vector<Upd> hist;
  for (uint64_t i = 0; i < 13; ++i)
    hist.push_back({i, 1, 100 + i, i + 1});
  CHECK(q.value == oracle_map(hist, hist.size(), 7, 32));
}

TEST_CASE("point in time queries match the oracle across random workloads") {
  constexpr uint64_t kBlocks = 4096;
  TempDir td;
  for (uint64_t wl = 0; wl < 12; ++wl) {
    SplitMix64 rng(0x9d0c + wl * 7919);
    std::string dir = td.file("wl" + std::to_string(wl));
    std::filesystem::create_directories(dir);
    auto shard = std::make_unique<Shard>(cdp_cfg(dir));
    REQUIRE(shard->pool_create(kPool, 0) == Status::Ok);
    uint64_t qcap = std::vector<uint64_t>{4, 16, 64}[wl % 3];
    REQUIRE(vol_configure(*shard, qcap, 1000000, kRetentionCount, 0) ==
            Status::Ok);

    std::vector<Upd> hist;
    uint64_t ts = 0;
    size_t n_updates = 40 + rng.next_below(360);
    size_t reopen_at = n_updates / 2;
    for (size_t i = 0; i < n_updates; ++i) {
      if (wl % 4 == 1 && i == reopen_at) {
        /* recovery mid-workload must be invisible to later answers */
        shard.reset();
        shard = std::make_unique<Shard>(cdp_cfg(dir));
        REQUIRE(shard->pool_open(kPool) == Status::Ok);
      }
      Upd u;
      u.len = uint32_t(rng.next_range(1, 100));
      u.virt = rng.next_below(kBlocks - u.len);
      u.managed = rng.next_below(1ull << 40);
      if (!hist.empty() && rng.next_below(10) < 2) {
        const Upd& p = hist.back();
        if (p.virt + p.len + u.len <= kBlocks) {
          u.virt = p.virt + p.len;
          u.managed = p.managed + p.len;
        }
      }
      if (rng.next_below(8) != 0 || ts == 0) ts += rng.next_range(1, 1000);
      u.ts = ts;
      auto r = vol_update(*shard, u.virt, u.len, u.managed, u.ts);
      REQUIRE(r.ok());
      REQUIRE(r.value == hist.size() + 1);
      hist.push_back(u);
    }

    for (int probe = 0; probe < 25; ++probe) {
      uint64_t t;
      switch (probe % 4) {
        case 0: t = hist[rng.next_below(hist.size())].ts; break;
        case 1: t = rng.next_below(ts + 100); break;
        case 2: t = 0; break;
        default: t = ~0ull; break;
      }
      BlockMap want = oracle_map(hist, hist.size(), t, kBlocks);
      auto q = vol_query(*shard, encode_query(t));
      REQUIRE(q.ok());
      CHECK(q.value == want);

      uint64_t rl = rng.next_range(1, 256);
      uint64_t rv = rng.next_below(kBlocks - rl);
      auto qc = vol_query(*shard, encode_query(t, rv, rl));
      REQUIRE(qc.ok());
      CHECK(qc.value == clip(want, rv, rl));
    }
  }
}

TEST_CASE("count based trim keeps the retention window queryable") {
  TempDir td;
  Shard s(cdp_cfg(td.path()));
  REQUIRE(s.pool_create(kPool, 0) == Status::Ok);
  REQUIRE(vol_configure(s, 4, 2, kRetentionCount, 0) == Status::Ok);

  /* nothing to trim while a single quantum exists */
  auto t0 = vol_u64_op(s, encode_trim(0));
  REQUIRE(t0.ok());
  CHECK(t0.value == 0);

  std::vector<Upd> hist;
  for (uint64_t i = 0; i < 41; ++i) {
    Upd u{i % 32, 1, 500 + i, (i + 1) * 10};
    REQUIRE(vol_update(s, u.virt, u.len, u.managed, u.ts).ok());
    hist.push_back(u);
  }
  VolView before = vol_view(s);
  CHECK(before.quanta.size() == 11); /* 10 sealed + open tail */

  /* answers inside the retained window, captured before the trim */
  std::vector<std::pair<uint64_t, BlockMap>> kept;
  for (uint64_t t : {330ull, 380ull, 410ull, ~0ull}) {
    auto q = vol_query(s, encode_query(t));
    REQUIRE(q.ok());
    kept.push_back({t, q.value});
  }

  auto tr = vol_u64_op(s, encode_trim(0));
  REQUIRE(tr.ok());
  CHECK(tr.value == 8); /* 11 -> retention(2) + open tail */
  VolView after = vol_view(s);
  CHECK(after.quanta.size() == 3);
  CHECK(after.trimmed_before == 330); /* first record of the new head */

  /* retained answers are unchanged, including mid-quantum times on the
     new head whose older history now lives in the inherited base */
  for (auto& [t, want] : kept) {
    auto q = vol_query(s, encode_query(t));
    REQUIRE(q.ok());
    CHECK(q.value == want);
    CHECK(q.value == oracle_map(hist, hist.size(), t, 64));
  }
  CHECK(vol_query(s, encode_query(329)).status == Status::HistoryTrimmed);

  /* trimming again is a no-op until more quanta seal */
  tr = vol_u64_op(s, encode_trim(0));
  REQUIRE(tr.ok());
  CHECK(tr.value == 0);
}

TEST_CASE("age based trim drops quanta past the age limit") {
  TempDir td;
  Shard s(cdp_cfg(td.path()));
  REQUIRE(s.pool_create(kPool, 0) == Status::Ok);
  REQUIRE(vol_configure(s, 4, 1, kRetentionAge, 50) == Status::Ok);

  for (uint64_t i = 0; i < 17; ++i)
    REQUIRE(vol_update(s, i % 8, 1, i, (i + 1) * 10).ok());
  /* quantum boundaries: last record times 40, 80, 120, 160 */
  auto tr = vol_u64_op(s, encode_trim(135));
  REQUIRE(tr.ok());
  CHECK(tr.value == 2); /* 40+50 < 135 and 80+50 < 135, 120+50 >= 135 */
  VolView v = vol_view(s);
  CHECK(v.quanta.size() == 3);
  CHECK(v.trimmed_before == 90);

  /* the open tail is never trimmed regardless of age, and neither is
     its predecessor: the quantum becoming head must be summarized so
     the retention boundary stays queryable, which an OPEN tail is not */
  tr = vol_u64_op(s, encode_trim(~0ull));
  REQUIRE(tr.ok());
  v = vol_view(s);
  CHECK(v.quanta.size() == 2);
  CHECK(v.states.back() == kStateOpen);
}

TEST_CASE("digest depends on committed state only") {
  TempDir td;
  auto run = [&](const std::string& name, size_t n) {
    std::string dir = td.file(name);
    std::filesystem::create_directories(dir);
    auto s = std::make_unique<Shard>(cdp_cfg(dir));
    REQUIRE(s->pool_create(kPool, 0) == Status::Ok);
    REQUIRE(vol_configure(*s, 8, 100, kRetentionCount, 0) == Status::Ok);
    for (uint64_t i = 0; i < n; ++i)
      REQUIRE(vol_update(*s, i % 128, 2, 900 + i, (i + 1) * 3).ok());
    auto d = vol_u64_op(*s, encode_digest());
    REQUIRE(d.ok());
    return std::make_pair(std::move(s), d.value);
  };

  auto [s1, d1] = run("a", 60);
  auto [s2, d2] = run("b", 60);
  CHECK(d1 == d2); /* identical histories digest identically */

  auto [s3, d3] = run("c", 59);
  CHECK(d1 != d3);

  /* reopen (and its re-summarization) leaves the digest unchanged */
  std::string dir = td.file("a");
  s1.reset();
  Shard r(cdp_cfg(dir));
  REQUIRE(r.pool_open(kPool) == Status::Ok);
  auto d = vol_u64_op(r, encode_digest());
  REQUIRE(d.ok());
  CHECK(d.value == d1);
}

/* Crash sweep over the full op mix. After reopen, the volume must hold
   exactly the acknowledged updates, or those plus the one in flight. */
TEST_CASE("volume state survives injected crashes") {
  constexpr uint64_t kBlocks = 64;
  TempDir td;
  std::vector<Upd> script;
  for (uint64_t i = 0; i < 30; ++i)
    script.push_back({i % kBlocks, 2, 700 + i * 3, (i + 1) * 10});

  bool completed = false;
  /* dense points early, then geometric strides out to script completion */
  for (int k = 1; !completed && k < 2000000; k = k < 100 ? k + 1 : k + 1 + k / 16) {
    std::string dir = td.file("c" + std::to_string(k));
    std::filesystem::create_directories(dir);
    size_t acked = 0;
    bool crashed = false;
    {
      Shard s(cdp_cfg(dir));
      try {
        if (s.pool_create(kPool, 0) != Status::Ok) FAIL("pool_create failed");
        if (vol_configure(s, 4, 2, kRetentionCount, 0) != Status::Ok)
          FAIL("configure failed");
        s.debug_pool(kPool)->crash_clock()->arm(k);
        for (size_t i = 0; i < script.size(); ++i) {
          const Upd& u = script[i];
          if (!vol_update(s, u.virt, u.len, u.managed, u.ts).ok())
            FAIL("update failed");
          acked = i + 1;
          if ((i + 1) % 10 == 0) {
            if (!vol_u64_op(s, encode_trim(0)).ok()) FAIL("trim failed");
          }
        }
      } catch (const CrashInjected&) {
        crashed = true;
      }
      if (crashed) {
        Pool* p = s.debug_pool(kPool);
        REQUIRE(p != nullptr);
        SplitMix64 rng(uint64_t(k) * 31 + 7);
        p->materialize_crash(rng);
        p->poison(); /* reopen reads the materialized file image */
      } else {
        completed = true;
      }
    }

    Shard r(cdp_cfg(dir));
    if (r.pool_open(kPool) != Status::Ok) {
      /* the crash predated pool creation; nothing durable to check */
      CHECK(acked == 0);
      continue;
    }
    REQUIRE(r.debug_pool(kPool)->check_heaps());
    auto q = vol_query(r, encode_query(~0ull));
    if (!q.ok()) {
      /* the crash predated volume initialization */
      CHECK(q.status == Status::VolumeNotFound);
      CHECK(acked == 0);
      continue;
    }
    BlockMap at_acked = oracle_map(script, acked, ~0ull, kBlocks);
    BlockMap at_next =
        oracle_map(script, std::min(acked + 1, script.size()), ~0ull, kBlocks);
    bool matches = q.value == at_acked || q.value == at_next;
    CHECK(matches);

    /* the reopened volume accepts further appends */
    auto cont = vol_update(r, 1, 1, 5000, 100000);
    CHECK(cont.ok());
  }
  CHECK(completed);
}
