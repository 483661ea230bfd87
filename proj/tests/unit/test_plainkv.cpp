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
#include "akv/cdp/plainkv.hpp"
#include "akv/cdp/plugin.hpp"
#include "akv/hash.hpp"
#include "akv/store/shard.hpp"

using namespace akv;
using namespace akv::cdp;
using namespace akv::store;
using akv::testing::TempDir;

namespace {

/* KV transport over an in-process shard; every call is one round trip. */
class ShardTransport : public KvTransport {
 public:
  ShardTransport(Shard& s, std::string pool) : shard_(s), pool_(std::move(pool)) {}

  Status put(const std::string& key, byte_span value) override {
    ++rtt_;
    return shard_.kv_put(pool_, as_bytes(key), value);
  }
  Result<byte_buffer> get(const std::string& key) override {
    ++rtt_;
    return shard_.kv_get(pool_, as_bytes(key));
  }
  Status erase(const std::string& key) override {
    ++rtt_;
    return shard_.kv_erase(pool_, as_bytes(key));
  }
  uint64_t round_trips() const override { return rtt_; }

 private:
  Shard& shard_;
  std::string pool_;
  uint64_t rtt_ = 0;
};

ShardConfig base_cfg(const std::string& dir) {
  ShardConfig c;
  c.data_dir = dir;
  c.plugins = {kCdpPluginId};
  c.synchronous_ado = true;
  c.pool_options.initial_size = 8 << 20;
  c.pool_options.expansion_size = 8 << 20;
  c.pool_options.simulate = true;
  return c;
}

const std::string kAdoPool = "apool";
const std::string kKvPool = "bpool";
const std::string kVol = "vol";

/* thin wrappers over the plugin protocol */
Result<uint64_t> ado_update(Shard& s, uint64_t virt, uint32_t len,
                            uint64_t managed, uint64_t ts) {
  auto r = s.invoke_ado_sync(kAdoPool, as_bytes(kVol),
                             encode_update(virt, len, managed, ts),
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, 0};
  return {Status::Ok, get_u64_le(r.value[0].data())};
}

Result<BlockMap> ado_query(Shard& s, byte_buffer req) {
  auto r = s.invoke_ado_sync(kAdoPool, as_bytes(kVol), req,
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, {}};
  BlockMap m;
  REQUIRE(decode_block_map(r.value[0], m));
  return {Status::Ok, std::move(m)};
}

Result<uint64_t> ado_u64(Shard& s, byte_buffer req) {
  auto r = s.invoke_ado_sync(kAdoPool, as_bytes(kVol), req,
                             kInvokeCreateIfMissing, kVolumeRootSize);
  if (!r.ok()) return {r.status, 0};
  return {Status::Ok, get_u64_le(r.value[0].data())};
}

}  // namespace

TEST_CASE("baseline and in-store volumes answer identically") {
  constexpr uint64_t kBlocks = 2048;
  TempDir td;
  for (uint64_t wl = 0; wl < 6; ++wl) {
    SplitMix64 rng(0xbead + wl * 101);
    std::string dir = td.file("wl" + std::to_string(wl));
    std::filesystem::create_directories(dir);
    Shard s(base_cfg(dir));
    REQUIRE(s.pool_create(kAdoPool, 0) == Status::Ok);
    REQUIRE(s.pool_create(kKvPool, 0) == Status::Ok);
    ShardTransport kv(s, kKvPool);
    auto plain = std::make_unique<PlainKvVolume>(kv, kVol);

    uint64_t qcap = std::vector<uint64_t>{4, 8, 32}[wl % 3];
    REQUIRE(s.invoke_ado_sync(kAdoPool, as_bytes(kVol),
                              encode_configure(qcap, 2, kRetentionCount, 0),
                              kInvokeCreateIfMissing, kVolumeRootSize)
                .status == Status::Ok);
    REQUIRE(plain->configure(qcap, 2, kRetentionCount, 0) == Status::Ok);

    uint64_t ts = 0;
    size_t n_ops = 120 + rng.next_below(120);
    size_t updates = 0;
    for (size_t i = 0; i < n_ops; ++i) {
      uint64_t roll = rng.next_below(100);
      if (roll < 80) {
        uint32_t len = uint32_t(rng.next_range(1, 60));
        uint64_t virt = rng.next_below(kBlocks - len);
        uint64_t managed = rng.next_below(1ull << 32);
        ts += rng.next_range(1, 50);
        auto a = ado_update(s, virt, len, managed, ts);
        auto b = plain->update(virt, len, managed, ts);
        REQUIRE(a.ok());
        REQUIRE(b.ok());
        CHECK(a.value == b.value);
        ++updates;
      } else if (roll < 90) {
        uint64_t t = rng.next_below(ts + 20);
        auto a = ado_query(s, encode_query(t));
        auto b = plain->query(t);
        CHECK(a.status == b.status);
        if (a.ok()) CHECK(a.value == b.value);
        uint64_t rl = rng.next_range(1, 128);
        uint64_t rv = rng.next_below(kBlocks - rl);
        auto ac = ado_query(s, encode_query(t, rv, rl));
        auto bc = plain->query(t, rv, rl);
        CHECK(ac.status == bc.status);
        if (ac.ok()) CHECK(ac.value == bc.value);
      } else if (roll < 95) {
        auto a = ado_u64(s, encode_trim(0));
        auto b = plain->trim(0);
        REQUIRE(a.ok());
        REQUIRE(b.ok());
        CHECK(a.value == b.value);
      } else {
        /* the baseline survives a client restart: rebuild from the
           store and keep matching */
        plain = std::make_unique<PlainKvVolume>(kv, kVol);
        REQUIRE(plain->load() == Status::Ok);
      }
    }

    auto da = ado_u64(s, encode_digest());
    auto db = plain->digest();
    REQUIRE(da.ok());
    REQUIRE(db.ok());
    CHECK(da.value == db.value);

    /* traffic: the in-store volume costs exactly one round trip per
       update; the baseline costs at least one plus periodic overhead */
    CHECK(kv.round_trips() > updates);
  }
}

/* Per-record pairs carry index, key, and allocator overhead that the
   packed quantum layout does not. The direction only shows at realistic
   quantum capacities; tiny quanta make per-quantum summaries dominate. */
TEST_CASE("per record mirroring uses more pool memory than packed quanta") {
  TempDir td;
  Shard s(base_cfg(td.path()));
  REQUIRE(s.pool_create(kAdoPool, 0) == Status::Ok);
  REQUIRE(s.pool_create(kKvPool, 0) == Status::Ok);
  ShardTransport kv(s, kKvPool);
  PlainKvVolume plain(kv, kVol);

  REQUIRE(s.invoke_ado_sync(kAdoPool, as_bytes(kVol),
                            encode_configure(1024, 10, kRetentionCount, 0),
                            kInvokeCreateIfMissing, kVolumeRootSize)
              .status == Status::Ok);
  REQUIRE(plain.configure(1024, 10, kRetentionCount, 0) == Status::Ok);

  for (uint64_t i = 0; i < 2000; ++i) {
    uint64_t virt = (i * 37) % 4096;
    REQUIRE(ado_update(s, virt, 4, i * 8, (i + 1) * 5).ok());
    REQUIRE(plain.update(virt, 4, i * 8, (i + 1) * 5).ok());
  }
  uint64_t ado_used = s.debug_pool(kAdoPool)->stats().heap_used;
  uint64_t kv_used = s.debug_pool(kKvPool)->stats().heap_used;
  CHECK(kv_used > ado_used);
}

TEST_CASE("baseline rebuild finds records written after the last manifest") {
  TempDir td;
  Shard s(base_cfg(td.path()));
  REQUIRE(s.pool_create(kKvPool, 0) == Status::Ok);
  ShardTransport kv(s, kKvPool);
  {
    PlainKvVolume v(kv, kVol);
    REQUIRE(v.configure(8, 2, kRetentionCount, 0) == Status::Ok);
    for (uint64_t i = 0; i < 13; ++i)
      REQUIRE(v.update(i, 1, 100 + i, (i + 1) * 10).ok());
  }
  PlainKvVolume v2(kv, kVol);
  REQUIRE(v2.load() == Status::Ok);
  auto q = v2.query(~0ull);
  REQUIRE(q.ok());
  BlockMap want;
  for (uint64_t i = 0; i < 13; ++i) merge_into(want, i, 1, 100 + i);
  CHECK(q.value == want);
  /* appends continue with the right sequence number */
  auto u = v2.update(0, 1, 999, 1000);
  REQUIRE(u.ok());
  CHECK(u.value == 14);
}
