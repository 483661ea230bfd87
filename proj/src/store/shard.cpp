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

#include "akv/store/shard.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <map>
#include <regex>
#include <variant>

#include "akv/hash.hpp"

namespace akv::store {

struct Shard::Pending {
  std::string key;
  bool has_put = false;
  byte_buffer put_value;
  byte_buffer request;
  uint32_t flags = 0;
  uint64_t value_size = 0;
  InvokeCompletion done;
};

struct Shard::OpenPool {
  std::string name;
  std::unique_ptr<Pool> pool;
  std::unique_ptr<index::HopscotchTable> table;
  std::vector<std::shared_ptr<ado::IAdoPlugin>> plugins;
  int handles = 0;

  struct ActiveWork {
    std::string key;
    uint64_t entry_addr = 0;
    bool unlocked = false;
    InvokeCompletion done;
  };
  std::map<uint64_t, ActiveWork> active;

  struct IterCursor {
    uint64_t epoch = 0;
    uint64_t bucket = 0;
  };
  std::map<uint64_t, IterCursor> cursors;
  uint64_t next_cursor = 1;

  std::unordered_map<std::string, std::deque<Pending>> waiting;

  /* asynchronous mode machinery */
  struct WorkItem {
    uint64_t work_id = 0;
    std::string key;
    std::vector<ado::ValueSlice> values;
    byte_buffer request;
    bool new_root = false;
  };
  std::thread primary;
  std::thread secondary;
  std::mutex qmu;
  std::condition_variable qcv;
  std::deque<WorkItem> work_q;
  std::deque<std::function<void()>> bg_q;
  bool stopping = false;

  /* synchronous mode: deferred background tasks drained inline */
  std::deque<std::function<void()>> sync_bg;

  std::unique_ptr<CallbacksImpl> cb_inline;
  std::unique_ptr<CallbacksImpl> cb_locking;
};

/* Callback bridge. The inline variant assumes the shard mutex is already
   held (synchronous dispatch); the locking variant takes it per call
   (worker-thread dispatch). */
class Shard::CallbacksImpl : public ado::Callbacks {
 public:
  CallbacksImpl(Shard& shard, OpenPool& op, bool take_lock)
      : shard_(shard), op_(op), take_lock_(take_lock) {}

  store::Pool& pool() override { return *op_.pool; }

  Result<ado::ValueSlice> create_key(const std::string& key,
                                     uint64_t value_size) override {
    auto g = guard();
    if (key.empty()) return {Status::ParameterError, {}};
    if (op_.table->find_entry(as_bytes(key)).ok())
      return {Status::AlreadyExists, {}};
    Pool& p = *op_.pool;
    auto a = p.alloc(std::max<uint64_t>(value_size, 1), 8);
    if (!a.ok()) return {a.status, {}};
    p.fill_zero(a.value, std::max<uint64_t>(value_size, 1));
    p.persist(a.value, std::max<uint64_t>(value_size, 1));
    auto r = op_.table->put(as_bytes(key), {a.value, value_size});
    if (!r.ok()) {
      p.free(a.value);
      return {r.status, {}};
    }
    return {Status::Ok, ado::ValueSlice{a.value, value_size}};
  }

  Result<ado::ValueSlice> open_key(const std::string& key) override {
    auto g = guard();
    auto r = op_.table->get(as_bytes(key));
    if (!r.ok()) return {r.status, {}};
    return {Status::Ok, ado::ValueSlice{r.value.addr, r.value.len}};
  }

  Status erase_key(const std::string& key) override {
    auto g = guard();
    return shard_.erase_locked(op_, as_bytes(key), kCallbackOwner);
  }

  Result<ado::ValueSlice> resize_value(const std::string& key,
                                       uint64_t new_size) override {
    auto g = guard();
    Status s = shard_.resize_locked(op_, as_bytes(key), new_size,
                                    kCallbackOwner);
    if (s != Status::Ok) return {s, {}};
    auto r = op_.table->get(as_bytes(key));
    if (!r.ok()) return {r.status, {}};
    return {Status::Ok, ado::ValueSlice{r.value.addr, r.value.len}};
  }

  Result<uint64_t> allocate_pool_memory(uint64_t size,
                                        uint64_t alignment) override {
    auto g = guard();
    return op_.pool->alloc(size, alignment ? alignment : 8);
  }

  Status free_pool_memory(uint64_t addr) override {
    auto g = guard();
    return op_.pool->free(addr);
  }

  Result<std::vector<RefEntry>> get_reference_vector() override {
    auto g = guard();
    std::vector<RefEntry> out;
    out.reserve(size_t(op_.table->count()));
    op_.table->iterate([&](byte_span key, index::ValueRef v, uint64_t) {
      out.push_back({to_string(key), {v.addr, v.len}});
    });
    return {Status::Ok, std::move(out)};
  }

  Result<RefEntry> iterate(uint64_t& cursor) override {
    auto g = guard();
    uint64_t epoch = op_.table->mutation_epoch();
    OpenPool::IterCursor state;
    if (cursor == 0) {
      state = {epoch, 0};
    } else {
      auto it = op_.cursors.find(cursor);
      if (it == op_.cursors.end()) return {Status::UnknownCursor, {}};
      state = it->second;
      op_.cursors.erase(it);
      if (state.epoch != epoch) return {Status::UnknownCursor, {}};
    }
    uint64_t entry = op_.table->scan_from(state.bucket);
    if (entry == 0) {
      cursor = 0;
      return {Status::NotFound, {}};
    }
    cursor = op_.next_cursor++;
    op_.cursors[cursor] = state;
    auto v = op_.table->entry_value(entry);
    return {Status::Ok, RefEntry{op_.table->entry_key(entry), {v.addr, v.len}}};
  }

  Result<std::string> find_key(const std::string& pattern,
                               uint64_t& position) override {
    auto g = guard();
    std::regex re;
    try {
      re = std::regex(pattern);
    } catch (const std::regex_error&) {
      return {Status::ParameterError, {}};
    }
    auto keys = op_.table->sorted_keys();
    for (uint64_t i = position; i < keys.size(); ++i) {
      if (std::regex_search(keys[size_t(i)], re)) {
        position = i + 1;
        return {Status::Ok, keys[size_t(i)]};
      }
    }
    position = keys.size();
    return {Status::NotFound, {}};
  }

  ado::PoolInfo get_pool_info() override {
    auto g = guard();
    auto st = op_.pool->stats();
    return {st.capacity, st.heap_free, op_.table->count(), st.region_count};
  }

  Status unlock(uint64_t work_id) override {
    std::vector<std::function<void()>> ready;
    Status s;
    {
      auto g = guard();
      auto it = op_.active.find(work_id);
      if (it == op_.active.end()) {
        s = Status::StateError;
      } else {
        auto& aw = it->second;
        if (!aw.unlocked && aw.entry_addr)
          op_.table->set_lock_word(aw.entry_addr, 0);
        aw.unlocked = true;
        shard_.drain_waiting(op_, aw.key, ready);
        s = Status::Ok;
      }
    }
    for (auto& f : ready) f();
    return s;
  }

  void defer(std::function<void()> task) override {
    if (shard_.cfg_.synchronous_ado) {
      op_.sync_bg.push_back(std::move(task));
      return;
    }
    {
      std::lock_guard<std::mutex> ql(op_.qmu);
      op_.bg_q.push_back(std::move(task));
    }
    {
      std::lock_guard<std::mutex> l(shard_.mu_);
      ++shard_.inflight_;
    }
    op_.qcv.notify_all();
  }

 private:
  struct NullGuard {};
  std::variant<NullGuard, std::unique_lock<std::mutex>> guard() {
    if (take_lock_) return std::unique_lock<std::mutex>(shard_.mu_);
    return NullGuard{};
  }

  Shard& shard_;
  OpenPool& op_;
  bool take_lock_;
};

uint32_t Shard::shard_of(const std::string& pool_name, uint32_t shard_count) {
  if (shard_count <= 1) return 0;
  return uint32_t(hash_bytes(as_bytes(pool_name), 0x9e3779b97f4a7c15ull) %
                  shard_count);
}

bool Shard::owns_pool(const std::string& pool_name) const {
  return shard_of(pool_name, cfg_.shard_count) == cfg_.shard_id;
}

Shard::Shard(ShardConfig cfg) : cfg_(std::move(cfg)) {}

Shard::~Shard() {
  std::unique_lock<std::mutex> l(mu_);
  for (auto& [name, op] : pools_) close_pool_locked(l, *op);
  pools_.clear();
}

std::string Shard::pool_path(const std::string& name) const {
  std::string safe;
  for (char c : name)
    safe += (std::isalnum(uint8_t(c)) || c == '-' || c == '_') ? c : '_';
  return cfg_.data_dir + "/" + safe + ".pool";
}

Shard::OpenPool* Shard::find_pool(const std::string& name) {
  auto it = pools_.find(name);
  return it == pools_.end() ? nullptr : it->second.get();
}

Status Shard::pool_create(const std::string& name, uint64_t size) {
  std::lock_guard<std::mutex> l(mu_);
  if (!owns_pool(name)) return Status::WrongShard;
  if (find_pool(name) || Pool::exists(pool_path(name)))
    return Status::NameCollision;
  PoolOptions po = cfg_.pool_options;
  if (size) po.initial_size = size;
  try {
    auto pool = Pool::create(pool_path(name), po);
    auto hdr = index::HopscotchTable::create(*pool, 1024);
    if (!hdr.ok()) {
      pool->poison();
      Pool::remove_files(pool_path(name));
      return hdr.status;
    }
    pool->set_root(hdr.value);
    return attach_pool_locked(name, std::move(pool));
  } catch (const CrashInjected&) {
    throw;
  } catch (const Error& e) {
    return e.status();
  }
}

Status Shard::pool_open(const std::string& name) {
  std::lock_guard<std::mutex> l(mu_);
  if (!owns_pool(name)) return Status::WrongShard;
  if (OpenPool* op = find_pool(name)) {
    ++op->handles;
    return Status::Ok;
  }
  if (!Pool::exists(pool_path(name))) return Status::NotFound;
  try {
    auto pool = Pool::open(pool_path(name), cfg_.pool_options);
    return attach_pool_locked(name, std::move(pool));
  } catch (const CrashInjected&) {
    throw;
  } catch (const Error& e) {
    return e.status();
  }
}

Status Shard::attach_pool_locked(const std::string& name,
                                 std::unique_ptr<Pool> pool) {
  auto op = std::make_unique<OpenPool>();
  op->name = name;
  op->pool = std::move(pool);
  op->table = std::make_unique<index::HopscotchTable>(*op->pool,
                                                      op->pool->root());
  /* in-flight owners from a previous incarnation are gone */
  op->table->clear_locks();
  for (auto& id : cfg_.plugins) {
    auto pl = ado::PluginRegistry::instance().create(id);
    if (!pl.ok()) return Status::PluginLoadError;
    op->plugins.push_back(std::move(pl.value));
  }
  op->cb_inline = std::make_unique<CallbacksImpl>(*this, *op, false);
  op->cb_locking = std::make_unique<CallbacksImpl>(*this, *op, true);
  op->handles = 1;
  if (!cfg_.synchronous_ado) {
    op->primary = std::thread(&Shard::worker_loop, this, op.get());
    op->secondary = std::thread(&Shard::background_loop, this, op.get());
  }
  for (auto& pl : op->plugins) pl->attached(*op->cb_inline);
  pools_[name] = std::move(op);
  return Status::Ok;
}

void Shard::close_pool_locked(std::unique_lock<std::mutex>& l, OpenPool& op) {
  if (!cfg_.synchronous_ado) {
    {
      std::lock_guard<std::mutex> ql(op.qmu);
      op.stopping = true;
    }
    op.qcv.notify_all();
    l.unlock();
    if (op.primary.joinable()) op.primary.join();
    if (op.secondary.joinable()) op.secondary.join();
    l.lock();
  }
  for (auto& pl : op.plugins) pl->detaching(*op.cb_inline);
  op.pool->close();
}

Status Shard::pool_close(const std::string& name) {
  std::unique_lock<std::mutex> l(mu_);
  OpenPool* op = find_pool(name);
  if (!op) return Status::NotFound;
  if (--op->handles > 0) return Status::Ok;
  if (!op->active.empty()) {
    ++op->handles; /* still busy; caller should drain first */
    return Status::Busy;
  }
  close_pool_locked(l, *op);
  pools_.erase(name);
  return Status::Ok;
}

Status Shard::pool_delete(const std::string& name) {
  std::lock_guard<std::mutex> l(mu_);
  if (!owns_pool(name)) return Status::WrongShard;
  if (find_pool(name)) return Status::Busy;
  if (!Pool::exists(pool_path(name))) return Status::NotFound;
  Pool::remove_files(pool_path(name));
  return Status::Ok;
}

Status Shard::check_lock(OpenPool& op, uint64_t entry_addr) const {
  if (entry_addr && op.table->lock_word(entry_addr) != 0)
    return Status::LockedByAdo;
  return Status::Ok;
}

Status Shard::put_locked(OpenPool& op, byte_span key, byte_span value) {
  Pool& p = *op.pool;
  auto e = op.table->find_entry(key);
  if (e.ok()) {
    p.tx_begin();
    auto a = p.alloc(std::max<uint64_t>(value.size(), 1), 8);
    if (!a.ok()) {
      p.tx_commit();
      return a.status;
    }
    if (!value.empty()) p.write(a.value, value);
    p.persist(a.value, std::max<uint64_t>(value.size(), 1));
    auto old = op.table->swap_value(e.value, {a.value, value.size()});
    if (old.addr) p.free(old.addr);
    p.tx_commit();
    return Status::Ok;
  }
  auto a = p.alloc(std::max<uint64_t>(value.size(), 1), 8);
  if (!a.ok()) return a.status;
  if (!value.empty()) p.write(a.value, value);
  p.persist(a.value, std::max<uint64_t>(value.size(), 1));
  auto r = op.table->put(key, {a.value, value.size()});
  if (!r.ok()) {
    p.free(a.value);
    return r.status;
  }
  return Status::Ok;
}

Status Shard::resize_locked(OpenPool& op, byte_span key, uint64_t new_size,
                            uint64_t owner) {
  Pool& p = *op.pool;
  auto e = op.table->find_entry(key);
  if (!e.ok()) return e.status;
  if (owner != kCallbackOwner) {
    Status ls = check_lock(op, e.value);
    if (ls != Status::Ok) return ls;
  }
  auto old = op.table->entry_value(e.value);
  p.tx_begin();
  auto a = p.alloc(std::max<uint64_t>(new_size, 1), 8);
  if (!a.ok()) {
    p.tx_commit();
    return a.status;
  }
  uint64_t keep = std::min(old.len, new_size);
  if (keep) p.write(a.value, p.read(old.addr, keep));
  if (new_size > keep) p.fill_zero(a.value + keep, new_size - keep);
  p.persist(a.value, std::max<uint64_t>(new_size, 1));
  op.table->swap_value(e.value, {a.value, new_size});
  if (old.addr) p.free(old.addr);
  p.tx_commit();
  return Status::Ok;
}

Status Shard::erase_locked(OpenPool& op, byte_span key, uint64_t owner) {
  Pool& p = *op.pool;
  auto e = op.table->find_entry(key);
  if (!e.ok()) return e.status;
  if (owner != kCallbackOwner) {
    Status ls = check_lock(op, e.value);
    if (ls != Status::Ok) return ls;
  }
  /* work items referencing this pair lose their entry handle */
  for (auto& [id, aw] : op.active) {
    if (aw.entry_addr == e.value) {
      aw.entry_addr = 0;
      aw.unlocked = true;
    }
  }
  p.tx_begin();
  auto r = op.table->erase(key);
  if (r.ok() && r.value.addr) p.free(r.value.addr);
  p.tx_commit();
  return r.status;
}

Status Shard::kv_put(const std::string& pool, byte_span key, byte_span value) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(pool);
  if (!op) return owns_pool(pool) ? Status::NotFound : Status::WrongShard;
  if (key.empty()) return Status::ParameterError;
  auto e = op->table->find_entry(key);
  if (e.ok()) {
    Status ls = check_lock(*op, e.value);
    if (ls != Status::Ok) return ls;
  }
  return put_locked(*op, key, value);
}

Result<byte_buffer> Shard::kv_get(const std::string& pool, byte_span key) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(pool);
  if (!op)
    return {owns_pool(pool) ? Status::NotFound : Status::WrongShard, {}};
  if (key.empty()) return {Status::ParameterError, {}};
  auto e = op->table->find_entry(key);
  if (!e.ok()) return {e.status, {}};
  Status ls = check_lock(*op, e.value);
  if (ls != Status::Ok) return {ls, {}};
  auto v = op->table->entry_value(e.value);
  if (v.len == 0) return {Status::Ok, {}};
  return {Status::Ok, to_buffer(op->pool->read(v.addr, v.len))};
}

Status Shard::kv_erase(const std::string& pool, byte_span key) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(pool);
  if (!op) return owns_pool(pool) ? Status::NotFound : Status::WrongShard;
  if (key.empty()) return Status::ParameterError;
  return erase_locked(*op, key, 0);
}

Status Shard::kv_resize(const std::string& pool, byte_span key,
                        uint64_t new_size) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(pool);
  if (!op) return owns_pool(pool) ? Status::NotFound : Status::WrongShard;
  if (key.empty()) return Status::ParameterError;
  return resize_locked(*op, key, new_size, 0);
}

void Shard::invoke_ado(const std::string& pool, byte_span key,
                       byte_span request, uint32_t flags, uint64_t value_size,
                       InvokeCompletion done) {
  Pending p;
  p.key = to_string(key);
  p.request = to_buffer(request);
  p.flags = flags;
  p.value_size = value_size;
  p.done = std::move(done);
  submit_invoke(pool, std::move(p));
}

void Shard::invoke_put_ado(const std::string& pool, byte_span key,
                           byte_span value, byte_span request, uint32_t flags,
                           InvokeCompletion done) {
  Pending p;
  p.key = to_string(key);
  p.has_put = true;
  p.put_value = to_buffer(value);
  p.request = to_buffer(request);
  p.flags = flags;
  p.done = std::move(done);
  submit_invoke(pool, std::move(p));
}

void Shard::submit_invoke(const std::string& pool, Pending p) {
  std::vector<std::function<void()>> ready;
  {
    std::lock_guard<std::mutex> l(mu_);
    OpenPool* op = find_pool(pool);
    if (!op) {
      Status st = owns_pool(pool) ? Status::NotFound : Status::WrongShard;
      InvokeCompletion done = std::move(p.done);
      ready.push_back([done, st] { done(st, {}); });
    } else {
      start_invoke(*op, std::move(p), ready);
    }
  }
  for (auto& f : ready) f();
}

void Shard::start_invoke(OpenPool& op, Pending p,
                         std::vector<std::function<void()>>& ready) {
  auto fail = [&](Status st) {
    InvokeCompletion done = std::move(p.done);
    ready.push_back([done, st] { done(st, {}); });
  };

  uint64_t entry_addr = 0;
  bool new_root = false;
  std::vector<ado::ValueSlice> values;

  if (!p.key.empty()) {
    auto e = op.table->find_entry(as_bytes(p.key));
    bool locked = e.ok() && op.table->lock_word(e.value) != 0;
    if (locked || !op.waiting[p.key].empty()) {
      op.waiting[p.key].push_back(std::move(p));
      return;
    }
    if (p.has_put) {
      Status ps = put_locked(op, as_bytes(p.key), p.put_value);
      if (ps != Status::Ok) return fail(ps);
      new_root = !e.ok();
      e = op.table->find_entry(as_bytes(p.key));
    } else if (!e.ok()) {
      if (!(p.flags & kInvokeCreateIfMissing)) return fail(Status::NotFound);
      Pool& pl = *op.pool;
      uint64_t vsz = std::max<uint64_t>(p.value_size, 1);
      auto a = pl.alloc(vsz, 8);
      if (!a.ok()) return fail(a.status);
      pl.fill_zero(a.value, vsz);
      pl.persist(a.value, vsz);
      auto r = op.table->put(as_bytes(p.key), {a.value, p.value_size});
      if (!r.ok()) {
        pl.free(a.value);
        return fail(r.status);
      }
      new_root = true;
      e = op.table->find_entry(as_bytes(p.key));
    }
    if (!e.ok()) return fail(e.status);
    entry_addr = e.value;
    auto v = op.table->entry_value(entry_addr);
    values.push_back({v.addr, v.len});
  }

  uint64_t work_id = next_work_id_++;
  if (entry_addr) op.table->set_lock_word(entry_addr, work_id);
  OpenPool::ActiveWork aw;
  aw.key = p.key;
  aw.entry_addr = entry_addr;
  aw.done = std::move(p.done);
  op.active[work_id] = std::move(aw);

  if (cfg_.synchronous_ado) {
    ado::WorkRequest w;
    w.work_id = work_id;
    w.key = p.key;
    w.values = values;
    w.request = p.request;
    w.new_root = new_root;
    Status st = Status::Ok;
    std::vector<byte_buffer> responses;
    run_stack(op, w, *op.cb_inline, st, responses);
    finish_work(op, work_id, st, std::move(responses), ready);
    return;
  }

  OpenPool::WorkItem item;
  item.work_id = work_id;
  item.key = p.key;
  item.values = std::move(values);
  item.request = std::move(p.request);
  item.new_root = new_root;
  ++inflight_;
  {
    std::lock_guard<std::mutex> ql(op.qmu);
    op.work_q.push_back(std::move(item));
  }
  op.qcv.notify_all();
}

void Shard::run_stack(OpenPool& op, const ado::WorkRequest& work,
                      ado::Callbacks& cb, Status& st,
                      std::vector<byte_buffer>& responses) {
  st = Status::Ok;
  for (auto& pl : op.plugins) {
    try {
      st = pl->do_work(cb, work, responses);
    } catch (const CrashInjected&) {
      throw;
    } catch (const Error& e) {
      st = e.status();
    } catch (const std::exception&) {
      /* plugin trap is contained: the work item fails, the shard lives */
      st = Status::PluginError;
    }
    if (st != Status::Ok) break;
  }
}

void Shard::drain_waiting(OpenPool& op, const std::string& key,
                          std::vector<std::function<void()>>& ready) {
  auto wit = op.waiting.find(key);
  if (wit == op.waiting.end()) return;
  if (wit->second.empty()) {
    op.waiting.erase(wit);
    return;
  }
  Pending next = std::move(wit->second.front());
  wit->second.pop_front();
  if (wit->second.empty()) op.waiting.erase(wit);
  start_invoke(op, std::move(next), ready);
}

void Shard::finish_work(OpenPool& op, uint64_t work_id, Status st,
                        std::vector<byte_buffer> responses,
                        std::vector<std::function<void()>>& ready) {
  auto it = op.active.find(work_id);
  OpenPool::ActiveWork aw = std::move(it->second);
  op.active.erase(it);
  if (!aw.unlocked && aw.entry_addr)
    op.table->set_lock_word(aw.entry_addr, 0);

  if (cfg_.synchronous_ado) drain_background_locked(op);

  if (!aw.key.empty()) drain_waiting(op, aw.key, ready);

  InvokeCompletion done = std::move(aw.done);
  auto resp = std::make_shared<std::vector<byte_buffer>>(std::move(responses));
  ready.push_back([done, st, resp] { done(st, std::move(*resp)); });
}

void Shard::drain_background_locked(OpenPool& op) {
  while (!op.sync_bg.empty()) {
    auto task = std::move(op.sync_bg.front());
    op.sync_bg.pop_front();
    task(); /* CrashInjected propagates to the harness */
  }
}

void Shard::worker_loop(OpenPool* op) {
  for (;;) {
    OpenPool::WorkItem item;
    {
      std::unique_lock<std::mutex> ql(op->qmu);
      op->qcv.wait(ql, [&] { return op->stopping || !op->work_q.empty(); });
      if (op->stopping && op->work_q.empty()) return;
      item = std::move(op->work_q.front());
      op->work_q.pop_front();
    }
    ado::WorkRequest w;
    w.work_id = item.work_id;
    w.key = item.key;
    w.values = item.values;
    w.request = item.request;
    w.new_root = item.new_root;
    Status st = Status::Ok;
    std::vector<byte_buffer> responses;
    try {
      run_stack(*op, w, *op->cb_locking, st, responses);
    } catch (...) {
      st = Status::PluginError;
    }
    std::vector<std::function<void()>> ready;
    {
      std::lock_guard<std::mutex> l(mu_);
      finish_work(*op, item.work_id, st, std::move(responses), ready);
      --inflight_;
    }
    idle_cv_.notify_all();
    for (auto& f : ready) f();
  }
}

void Shard::background_loop(OpenPool* op) {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock<std::mutex> ql(op->qmu);
      op->qcv.wait(ql, [&] { return op->stopping || !op->bg_q.empty(); });
      if (op->stopping && op->bg_q.empty()) return;
      task = std::move(op->bg_q.front());
      op->bg_q.pop_front();
    }
    try {
      task();
    } catch (...) {
      /* background failures are contained */
    }
    {
      std::lock_guard<std::mutex> l(mu_);
      --inflight_;
    }
    idle_cv_.notify_all();
  }
}

void Shard::drain() {
  std::unique_lock<std::mutex> l(mu_);
  idle_cv_.wait(l, [&] { return inflight_ == 0; });
}

Result<std::vector<byte_buffer>> Shard::invoke_ado_sync(
    const std::string& pool, byte_span key, byte_span request, uint32_t flags,
    uint64_t value_size) {
  std::promise<Result<std::vector<byte_buffer>>> prom;
  auto fut = prom.get_future();
  invoke_ado(pool, key, request, flags, value_size,
             [&prom](Status st, std::vector<byte_buffer> r) {
               prom.set_value({st, std::move(r)});
             });
  return fut.get();
}

Result<std::vector<byte_buffer>> Shard::invoke_put_ado_sync(
    const std::string& pool, byte_span key, byte_span value, byte_span request,
    uint32_t flags) {
  std::promise<Result<std::vector<byte_buffer>>> prom;
  auto fut = prom.get_future();
  invoke_put_ado(pool, key, value, request, flags,
                 [&prom](Status st, std::vector<byte_buffer> r) {
                   prom.set_value({st, std::move(r)});
                 });
  return fut.get();
}

Pool* Shard::debug_pool(const std::string& name) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(name);
  return op ? op->pool.get() : nullptr;
}

index::HopscotchTable* Shard::debug_table(const std::string& name) {
  std::lock_guard<std::mutex> l(mu_);
  OpenPool* op = find_pool(name);
  return op ? op->table.get() : nullptr;
}

}  // namespace akv::store
