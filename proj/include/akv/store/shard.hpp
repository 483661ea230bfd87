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

#ifndef AKV_STORE_SHARD_HPP
#define AKV_STORE_SHARD_HPP

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "akv/ado/plugin.hpp"
#include "akv/index/hopscotch.hpp"
#include "akv/store/pool.hpp"

namespace akv::store {

/* invoke flags */
constexpr uint32_t kInvokeCreateIfMissing = 1u;
constexpr uint32_t kInvokeZeroCopyHint = 2u;

struct ShardConfig {
  uint32_t shard_id = 0;
  uint32_t shard_count = 1;
  std::string data_dir;
  PoolOptions pool_options;
  std::vector<std::string> plugins; /* ordered stack, attached to every pool */
  /* Run plugin work inline on the calling context instead of handing it
     to the pool's worker thread. Deterministic; used by tests and the
     crash harness. */
  bool synchronous_ado = false;
};

using InvokeCompletion =
    std::function<void(Status, std::vector<byte_buffer> responses)>;

/* One shard: owns its pools outright, services requests run-to-
   completion under a single execution context. ADO work in asynchronous
   mode runs on a per-pool primary worker; plugin callbacks re-enter the
   shard context. No state is shared across shards. */
class Shard {
 public:
  explicit Shard(ShardConfig cfg);
  ~Shard();

  const ShardConfig& config() const { return cfg_; }

  /* A pool belongs to exactly one shard for its lifetime. */
  static uint32_t shard_of(const std::string& pool_name, uint32_t shard_count);
  bool owns_pool(const std::string& pool_name) const;

  Status pool_create(const std::string& name, uint64_t size);
  Status pool_open(const std::string& name);
  Status pool_close(const std::string& name);
  Status pool_delete(const std::string& name);

  Status kv_put(const std::string& pool, byte_span key, byte_span value);
  Result<byte_buffer> kv_get(const std::string& pool, byte_span key);
  Status kv_erase(const std::string& pool, byte_span key);
  Status kv_resize(const std::string& pool, byte_span key, uint64_t new_size);

  void invoke_ado(const std::string& pool, byte_span key, byte_span request,
                  uint32_t flags, uint64_t value_size, InvokeCompletion done);
  void invoke_put_ado(const std::string& pool, byte_span key, byte_span value,
                      byte_span request, uint32_t flags, InvokeCompletion done);

  /* Blocking conveniences. */
  Result<std::vector<byte_buffer>> invoke_ado_sync(const std::string& pool,
                                                   byte_span key,
                                                   byte_span request,
                                                   uint32_t flags = 0,
                                                   uint64_t value_size = 0);
  Result<std::vector<byte_buffer>> invoke_put_ado_sync(const std::string& pool,
                                                       byte_span key,
                                                       byte_span value,
                                                       byte_span request,
                                                       uint32_t flags = 0);

  /* Wait until no plugin work or background task is in flight. */
  void drain();

  /* test hooks: direct access to an open pool's internals */
  Pool* debug_pool(const std::string& name);
  index::HopscotchTable* debug_table(const std::string& name);

 private:
  struct OpenPool;
  struct Pending;
  class CallbacksImpl;
  friend class CallbacksImpl;

  /* sentinel owner for callback-path mutations (lock check bypassed;
     callbacks execute on behalf of the work item holding the lock) */
  static constexpr uint64_t kCallbackOwner = ~0ull;

  std::string pool_path(const std::string& name) const;
  OpenPool* find_pool(const std::string& name);
  Status attach_pool_locked(const std::string& name, std::unique_ptr<Pool> p);
  void close_pool_locked(std::unique_lock<std::mutex>& l, OpenPool& op);
  Status check_lock(OpenPool& op, uint64_t entry_addr) const;
  Status put_locked(OpenPool& op, byte_span key, byte_span value);
  Status resize_locked(OpenPool& op, byte_span key, uint64_t new_size,
                       uint64_t owner_work_id);
  Status erase_locked(OpenPool& op, byte_span key, uint64_t owner_work_id);
  void submit_invoke(const std::string& pool, Pending p);
  void start_invoke(OpenPool& op, Pending p,
                    std::vector<std::function<void()>>& ready);
  void drain_waiting(OpenPool& op, const std::string& key,
                     std::vector<std::function<void()>>& ready);
  void finish_work(OpenPool& op, uint64_t work_id, Status st,
                   std::vector<byte_buffer> responses,
                   std::vector<std::function<void()>>& ready);
  void run_stack(OpenPool& op, const ado::WorkRequest& work,
                 ado::Callbacks& cb, Status& st,
                 std::vector<byte_buffer>& responses);
  void drain_background_locked(OpenPool& op);
  void worker_loop(OpenPool* op);
  void background_loop(OpenPool* op);

  ShardConfig cfg_;
  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::unordered_map<std::string, std::unique_ptr<OpenPool>> pools_;
  uint64_t next_work_id_ = 1;
  int inflight_ = 0;
};

}  // namespace akv::store

#endif
