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

#include <atomic>
#include <condition_variable>
#include <map>
#include <thread>

#include "../support/temp_dir.hpp"
#include "akv/store/shard.hpp"

using namespace akv;
using namespace akv::store;
using akv::testing::TempDir;

namespace {

ShardConfig test_cfg(const std::string& dir,
                     std::vector<std::string> plugins = {},
                     bool synchronous = true) {
  ShardConfig c;
  c.data_dir = dir;
  c.plugins = std::move(plugins);
  c.synchronous_ado = synchronous;
  c.pool_options.initial_size = 8 << 20;
  c.pool_options.expansion_size = 8 << 20;
  c.pool_options.simulate = true;
  return c;
}

struct EchoPlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-echo"; }
  Status do_work(ado::Callbacks&, const ado::WorkRequest& w,
                 std::vector<byte_buffer>& out) override {
    out.push_back(to_buffer(w.request));
    return Status::Ok;
  }
};

struct TagPlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-tag"; }
  Status do_work(ado::Callbacks&, const ado::WorkRequest&,
                 std::vector<byte_buffer>& out) override {
    out.push_back(to_buffer(as_bytes(std::string("tag"))));
    return Status::Ok;
  }
};

struct NewRootPlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-newroot"; }
  Status do_work(ado::Callbacks&, const ado::WorkRequest& w,
                 std::vector<byte_buffer>& out) override {
    byte_buffer b(1, std::byte(w.new_root ? 1 : 0));
    out.push_back(b);
    return Status::Ok;
  }
};

struct TrapPlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-trap"; }
  Status do_work(ado::Callbacks&, const ado::WorkRequest& w,
                 std::vector<byte_buffer>&) override {
    if (to_string(w.request) == "trap") throw std::runtime_error("boom");
    return Status::Ok;
  }
};

/* Exercises the callback surface; results reported as "ok"/"fail". */
struct ToolboxPlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-toolbox"; }
  Status do_work(ado::Callbacks& cb, const ado::WorkRequest& w,
                 std::vector<byte_buffer>& out) override {
    std::string cmd = to_string(w.request);
    auto report = [&](bool ok) {
      out.push_back(to_buffer(as_bytes(std::string(ok ? "ok" : "fail"))));
      return Status::Ok;
    };
    if (cmd == "crud") {
      auto c = cb.create_key("aux", 32);
      if (!c.ok() || c.value.len != 32) return report(false);
      if (cb.create_key("aux", 32).status != Status::AlreadyExists)
        return report(false);
      auto o = cb.open_key("aux");
      if (!o.ok() || o.value.addr != c.value.addr) return report(false);
      auto rz = cb.resize_value("aux", 64);
      if (!rz.ok() || rz.value.len != 64) return report(false);
      if (cb.erase_key("aux") != Status::Ok) return report(false);
      if (cb.open_key("aux").status != Status::NotFound) return report(false);
      return report(true);
    }
    if (cmd == "mem") {
      auto before = cb.get_pool_info();
      auto a = cb.allocate_pool_memory(1 << 20, 64);
      if (!a.ok()) return report(false);
      auto during = cb.get_pool_info();
      if (during.free_bytes + (1 << 20) > before.free_bytes + 4096)
        return report(false);
      if (cb.free_pool_memory(a.value) != Status::Ok) return report(false);
      return report(true);
    }
    if (cmd == "scan") {
      auto rv = cb.get_reference_vector();
      if (!rv.ok()) return report(false);
      std::map<std::string, uint64_t> seen;
      for (auto& e : rv.value) seen[e.key] = e.value.len;
      uint64_t cursor = 0;
      size_t n = 0;
      for (;;) {
        auto e = cb.iterate(cursor);
        if (e.status == Status::NotFound) break;
        if (!e.ok()) return report(false);
        ++n;
      }
      if (n != rv.value.size()) return report(false);
      uint64_t pos = 0;
      auto f = cb.find_key("^scan", pos);
      if (!f.ok() || f.value.rfind("scan", 0) != 0) return report(false);
      return report(true);
    }
    if (cmd == "stale-cursor") {
      uint64_t cursor = 0;
      auto e = cb.iterate(cursor);
      if (!e.ok()) return report(false);
      if (cb.create_key("mut", 8).status != Status::Ok) return report(false);
      auto e2 = cb.iterate(cursor);
      return report(e2.status == Status::UnknownCursor);
    }
    if (cmd == "unlock") {
      Status s = cb.unlock(w.work_id);
      return report(s == Status::Ok);
    }
    return Status::PluginError;
  }
};

std::atomic<bool> gate_open{false};
std::mutex gate_mu;
std::condition_variable gate_cv;

struct GatePlugin : ado::IAdoPlugin {
  std::string name() const override { return "test-gate"; }
  Status do_work(ado::Callbacks&, const ado::WorkRequest&,
                 std::vector<byte_buffer>&) override {
    std::unique_lock<std::mutex> l(gate_mu);
    gate_cv.wait(l, [] { return gate_open.load(); });
    return Status::Ok;
  }
};

ado::PluginRegistration r1("test-echo",
                           [] { return std::make_shared<EchoPlugin>(); });
ado::PluginRegistration r2("test-tag",
                           [] { return std::make_shared<TagPlugin>(); });
ado::PluginRegistration r3("test-newroot",
                           [] { return std::make_shared<NewRootPlugin>(); });
ado::PluginRegistration r4("test-trap",
                           [] { return std::make_shared<TrapPlugin>(); });
ado::PluginRegistration r5("test-toolbox",
                           [] { return std::make_shared<ToolboxPlugin>(); });
ado::PluginRegistration r6("test-gate",
                           [] { return std::make_shared<GatePlugin>(); });

}  // namespace

TEST_CASE("pool lifecycle") {
  TempDir td;
  Shard s(test_cfg(td.path()));

  CHECK(s.pool_create("p", 0) == Status::Ok);
  CHECK(s.pool_create("p", 0) == Status::NameCollision);
  CHECK(s.pool_open("missing") == Status::NotFound);
  CHECK(s.pool_delete("p") == Status::Busy);
  CHECK(s.pool_close("p") == Status::Ok);
  CHECK(s.pool_delete("p") == Status::Ok);
  CHECK(s.pool_delete("p") == Status::NotFound);
}

TEST_CASE("wrong shard rejected") {
  TempDir td;
  ShardConfig c = test_cfg(td.path());
  c.shard_id = 0;
  c.shard_count = 4;
  Shard s(c);

  std::string foreign = "x";
  while (Shard::shard_of(foreign, 4) == 0) foreign += "x";
  CHECK(s.pool_create(foreign, 0) == Status::WrongShard);
  CHECK(s.kv_put(foreign, as_bytes(std::string("k")),
                 as_bytes(std::string("v"))) == Status::WrongShard);

  std::string local = "y";
  while (Shard::shard_of(local, 4) != 0) local += "y";
  CHECK(s.pool_create(local, 0) == Status::Ok);
}

TEST_CASE("kv basics and reopen") {
  TempDir td;
  std::map<std::string, std::string> ref;
  {
    Shard s(test_cfg(td.path()));
    REQUIRE(s.pool_create("p", 0) == Status::Ok);

    CHECK(s.kv_put("p", {}, as_bytes(std::string("v"))) ==
          Status::ParameterError);
    CHECK(s.kv_get("p", as_bytes(std::string("nope"))).status ==
          Status::NotFound);

    SplitMix64 rng(7);
    for (int i = 0; i < 500; ++i) {
      std::string k = "k" + std::to_string(rng.next_below(120));
      if (rng.next_below(4) == 0 && ref.count(k)) {
        CHECK(s.kv_erase("p", as_bytes(k)) == Status::Ok);
        ref.erase(k);
      } else {
        std::string v(size_t(rng.next_range(0, 300)), char('a' + i % 26));
        CHECK(s.kv_put("p", as_bytes(k), as_bytes(v)) == Status::Ok);
        ref[k] = v;
      }
    }
    for (auto& [k, v] : ref) {
      auto g = s.kv_get("p", as_bytes(k));
      REQUIRE(g.ok());
      CHECK(to_string(g.value) == v);
    }
  }
  Shard s(test_cfg(td.path()));
  REQUIRE(s.pool_open("p") == Status::Ok);
  for (auto& [k, v] : ref) {
    auto g = s.kv_get("p", as_bytes(k));
    REQUIRE(g.ok());
    CHECK(to_string(g.value) == v);
  }
}

TEST_CASE("resize preserves prefix and zeroes tail") {
  TempDir td;
  Shard s(test_cfg(td.path()));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);
  REQUIRE(s.kv_put("p", as_bytes(std::string("k")),
                   as_bytes(std::string("hello"))) == Status::Ok);
  REQUIRE(s.kv_resize("p", as_bytes(std::string("k")), 8) == Status::Ok);
  auto g = s.kv_get("p", as_bytes(std::string("k")));
  REQUIRE(g.ok());
  CHECK(to_string(g.value) == std::string("hello\0\0\0", 8));
  REQUIRE(s.kv_resize("p", as_bytes(std::string("k")), 2) == Status::Ok);
  g = s.kv_get("p", as_bytes(std::string("k")));
  REQUIRE(g.ok());
  CHECK(to_string(g.value) == "he");
}

TEST_CASE("echo plugin and layering order") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-echo", "test-tag"}));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);
  REQUIRE(s.kv_put("p", as_bytes(std::string("k")),
                   as_bytes(std::string("v"))) == Status::Ok);

  auto r = s.invoke_ado_sync("p", as_bytes(std::string("k")),
                             as_bytes(std::string("payload")));
  REQUIRE(r.ok());
  REQUIRE(r.value.size() == 2);
  CHECK(to_string(r.value[0]) == "payload"); /* echo layer first */
  CHECK(to_string(r.value[1]) == "tag");     /* tag layer second */
}

TEST_CASE("invoke on absent key honors create flag and new_root") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-newroot"}));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);

  CHECK(s.invoke_ado_sync("p", as_bytes(std::string("k")), {}).status ==
        Status::NotFound);

  auto r = s.invoke_ado_sync("p", as_bytes(std::string("k")), {},
                             kInvokeCreateIfMissing, 128);
  REQUIRE(r.ok());
  REQUIRE(r.value.size() == 1);
  CHECK(r.value[0][0] == std::byte(1)); /* first invoke created the pair */
  auto g = s.kv_get("p", as_bytes(std::string("k")));
  REQUIRE(g.ok());
  CHECK(g.value.size() == 128);
  for (auto b : g.value) CHECK(b == std::byte(0));

  r = s.invoke_ado_sync("p", as_bytes(std::string("k")), {},
                        kInvokeCreateIfMissing, 128);
  REQUIRE(r.ok());
  CHECK(r.value[0][0] == std::byte(0));
}

TEST_CASE("plugin trap contained") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-trap"}));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);
  REQUIRE(s.kv_put("p", as_bytes(std::string("k")),
                   as_bytes(std::string("v"))) == Status::Ok);

  auto r = s.invoke_ado_sync("p", as_bytes(std::string("k")),
                             as_bytes(std::string("trap")));
  CHECK(r.status == Status::PluginError);

  /* the shard survives and the pair lock was released */
  CHECK(s.kv_put("p", as_bytes(std::string("k")),
                 as_bytes(std::string("w"))) == Status::Ok);
  r = s.invoke_ado_sync("p", as_bytes(std::string("k")),
                        as_bytes(std::string("fine")));
  CHECK(r.ok());
}

TEST_CASE("callback surface") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-toolbox"}));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);
  for (int i = 0; i < 3; ++i)
    REQUIRE(s.kv_put("p", as_bytes("scan" + std::to_string(i)),
                     as_bytes(std::string("v"))) == Status::Ok);

  for (std::string cmd : {"crud", "mem", "scan", "stale-cursor", "unlock"}) {
    CAPTURE(cmd);
    auto r = s.invoke_ado_sync("p", as_bytes(std::string("scan0")),
                               as_bytes(cmd));
    REQUIRE(r.ok());
    REQUIRE(!r.value.empty());
    CHECK(to_string(r.value.back()) == "ok");
  }
}

TEST_CASE("invoke_put_ado stores value before dispatch") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-echo"}));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);

  auto r = s.invoke_put_ado_sync("p", as_bytes(std::string("k")),
                                 as_bytes(std::string("value-bytes")),
                                 as_bytes(std::string("req")));
  REQUIRE(r.ok());
  auto g = s.kv_get("p", as_bytes(std::string("k")));
  REQUIRE(g.ok());
  CHECK(to_string(g.value) == "value-bytes");
}

TEST_CASE("locked pair: clients observe LockedByAdo, invokes queue") {
  TempDir td;
  Shard s(test_cfg(td.path(), {"test-gate"}, /*synchronous=*/false));
  REQUIRE(s.pool_create("p", 0) == Status::Ok);
  REQUIRE(s.kv_put("p", as_bytes(std::string("k")),
                   as_bytes(std::string("v0"))) == Status::Ok);

  gate_open = false;
  std::atomic<int> completions{0};
  s.invoke_ado("p", as_bytes(std::string("k")), {}, 0, 0,
               [&](Status st, std::vector<byte_buffer>) {
                 CHECK(st == Status::Ok);
                 ++completions;
               });

  /* wait until the worker holds the pair */
  for (int i = 0; i < 1000; ++i) {
    auto st = s.kv_put("p", as_bytes(std::string("k")),
                       as_bytes(std::string("v1")));
    if (st == Status::LockedByAdo) break;
    REQUIRE(st == Status::Ok);
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  CHECK(s.kv_put("p", as_bytes(std::string("k")),
                 as_bytes(std::string("v1"))) == Status::LockedByAdo);
  CHECK(s.kv_get("p", as_bytes(std::string("k"))).status ==
        Status::LockedByAdo);

  /* a second invoke on the same key queues rather than failing */
  s.invoke_put_ado("p", as_bytes(std::string("k")),
                   as_bytes(std::string("v2")), {}, 0,
                   [&](Status st, std::vector<byte_buffer>) {
                     CHECK(st == Status::Ok);
                     ++completions;
                   });
  std::this_thread::sleep_for(std::chrono::milliseconds(10));
  CHECK(completions.load() == 0);

  {
    std::lock_guard<std::mutex> l(gate_mu);
    gate_open = true;
  }
  gate_cv.notify_all();
  s.drain();
  CHECK(completions.load() == 2);
  auto g = s.kv_get("p", as_bytes(std::string("k")));
  REQUIRE(g.ok());
  CHECK(to_string(g.value) == "v2");
}

TEST_CASE("stale lock words cleared on reopen") {
  TempDir td;
  {
    Shard s(test_cfg(td.path()));
    REQUIRE(s.pool_create("p", 0) == Status::Ok);
    REQUIRE(s.kv_put("p", as_bytes(std::string("k")),
                     as_bytes(std::string("v"))) == Status::Ok);
    auto* t = s.debug_table("p");
    auto e = t->find_entry(as_bytes(std::string("k")));
    REQUIRE(e.ok());
    t->set_lock_word(e.value, 1234); /* owner dies with this process */
  }
  Shard s(test_cfg(td.path()));
  REQUIRE(s.pool_open("p") == Status::Ok);
  CHECK(s.kv_put("p", as_bytes(std::string("k")),
                 as_bytes(std::string("w"))) == Status::Ok);
}
