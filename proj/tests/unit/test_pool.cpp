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

#include <map>

#include "../support/temp_dir.hpp"
#include "akv/store/pool.hpp"

using namespace akv;
using namespace akv::store;
using akv::testing::TempDir;

namespace {

PoolOptions small_opts() {
  PoolOptions o;
  o.initial_size = 1 << 20;
  o.expansion_size = 1 << 20;
  o.undo_log_entries = 128;
  o.simulate = true;
  return o;
}

void put_u64(Pool& p, uint64_t addr, uint64_t v) {
  std::byte b[8];
  put_u64_le(b, v);
  p.write(addr, {b, 8});
}

}  // namespace

TEST_CASE("packed address round trip") {
  uint64_t a = Pool::pack(7, 0x123456789abull);
  CHECK(Pool::region_of(a) == 7);
  CHECK(Pool::offset_of(a) == 0x123456789abull);
  CHECK(Pool::pack(0, 42) == 42);
}

TEST_CASE("pool grows across regions and survives reopen") {
  TempDir td;
  std::string base = td.file("p");
  std::map<uint64_t, uint64_t> live; /* addr -> stamp */
  {
    auto p = Pool::create(base, small_opts());
    uint64_t stamp = 1;
    while (p->region_count() < 3) {
      auto a = p->alloc(64 << 10, 8);
      REQUIRE(a.ok());
      put_u64(*p, a.value, stamp);
      p->persist(a.value, 8);
      live[a.value] = stamp++;
    }
    CHECK(p->check_heaps());
    p->close();
  }
  CHECK(Pool::exists(base));
  auto p = Pool::open(base, small_opts());
  CHECK(p->region_count() >= 3);
  for (auto& [addr, stamp] : live) {
    CHECK(p->load_u64(addr) == stamp);
    auto sz = p->payload_size(addr);
    REQUIRE(sz.ok());
    CHECK(sz.value >= (64 << 10));
  }
  CHECK(p->check_heaps());

  /* allocations spanned more than one region */
  bool multi = false;
  for (auto& [addr, stamp] : live)
    if (Pool::region_of(addr) > 0) multi = true;
  CHECK(multi);
}

TEST_CASE("growth disabled reports out of memory") {
  TempDir td;
  PoolOptions o = small_opts();
  o.allow_growth = false;
  auto p = Pool::create(td.file("p"), o);
  while (true) {
    auto a = p->alloc(64 << 10, 8);
    if (!a.ok()) {
      CHECK(a.status == Status::OutOfMemory);
      break;
    }
  }
  CHECK(p->region_count() == 1);
}

TEST_CASE("pool root persists") {
  TempDir td;
  std::string base = td.file("p");
  uint64_t a;
  {
    auto p = Pool::create(base, small_opts());
    auto r = p->alloc(128, 8);
    REQUIRE(r.ok());
    a = r.value;
    p->set_root(a);
    p->close();
  }
  auto p = Pool::open(base, small_opts());
  CHECK(p->root() == a);
}

/* A transaction touching two regions must commit or roll back as one
   unit: sweep every injectable crash point and require that both words
   land on the same side. */
TEST_CASE("multi-region transaction is atomic under crash") {
  TempDir td;
  int completed_at = -1;
  for (int k = 1; k < 400 && completed_at < 0; ++k) {
    for (uint64_t seed = 0; seed < 2; ++seed) {
      std::string base = td.file("p" + std::to_string(k) + "_" +
                                 std::to_string(seed));
      uint64_t a0 = 0, a1 = 0;
      {
        auto p = Pool::create(base, small_opts());
        /* force a second region, then take one address in each */
        while (p->region_count() < 2) {
          auto a = p->alloc(64 << 10, 8);
          REQUIRE(a.ok());
          if (Pool::region_of(a.value) == 0) a0 = a.value;
          if (Pool::region_of(a.value) == 1) a1 = a.value;
        }
        REQUIRE(Pool::region_of(a0) == 0);
        REQUIRE(Pool::region_of(a1) == 1);
        put_u64(*p, a0, 100);
        put_u64(*p, a1, 200);
        p->persist(a0, 8);
        p->persist(a1, 8);

        p->crash_clock()->arm(k);
        bool crashed = false;
        try {
          p->tx_begin();
          p->tx_log(a0, 8);
          p->tx_log(a1, 8);
          put_u64(*p, a0, 101);
          put_u64(*p, a1, 201);
          p->tx_commit();
        } catch (const CrashInjected&) {
          crashed = true;
        }
        if (crashed) {
          SplitMix64 rng(seed * 31 + uint64_t(k));
          p->materialize_crash(rng);
        } else {
          completed_at = k;
          p->close();
        }
      }
      auto p = Pool::open(base, small_opts());
      uint64_t v0 = p->load_u64(a0);
      uint64_t v1 = p->load_u64(a1);
      if (completed_at == k) {
        CHECK(v0 == 101);
        CHECK(v1 == 201);
        break;
      }
      bool pre = (v0 == 100 && v1 == 200);
      bool post = (v0 == 101 && v1 == 201);
      CHECK((pre || post));
      CHECK(p->check_heaps());
    }
  }
  CHECK(completed_at > 0);
}

TEST_CASE("free returns space for reuse") {
  TempDir td;
  auto p = Pool::create(td.file("p"), small_opts());
  auto a = p->alloc(1000, 8);
  REQUIRE(a.ok());
  uint64_t used = p->stats().heap_used;
  CHECK(p->free(a.value) == Status::Ok);
  CHECK(p->stats().heap_used < used);
  auto b = p->alloc(1000, 8);
  REQUIRE(b.ok());
  CHECK(b.value == a.value);
}
