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

#ifndef AKV_ADO_PLUGIN_HPP
#define AKV_ADO_PLUGIN_HPP

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "akv/store/pool.hpp"

namespace akv::ado {

/* A value extent inside the pool, addressed in packed pool form. */
struct ValueSlice {
  uint64_t addr = 0;
  uint64_t len = 0;
};

/* One unit of plugin work. values[0] is the pair's current value (absent
   for pool-scoped work). new_root is true iff this invocation created
   the pair. The request body is opaque to everything but the plugin. */
struct WorkRequest {
  uint64_t work_id = 0;
  std::string key;
  std::vector<ValueSlice> values;
  byte_span request;
  bool new_root = false;
};

struct PoolInfo {
  uint64_t capacity = 0;
  uint64_t free_bytes = 0;
  uint64_t pair_count = 0;
  uint32_t region_count = 0;
};

/* Shard-side callback surface available to a plugin while it holds a
   live work item. Calls execute against the pool owning the work. */
class Callbacks {
 public:
  virtual ~Callbacks() = default;

  /* Direct access to pool memory; the pool is the security boundary. */
  virtual store::Pool& pool() = 0;

  virtual Result<ValueSlice> create_key(const std::string& key,
                                        uint64_t value_size) = 0;
  virtual Result<ValueSlice> open_key(const std::string& key) = 0;
  virtual Status erase_key(const std::string& key) = 0;
  virtual Result<ValueSlice> resize_value(const std::string& key,
                                          uint64_t new_size) = 0;
  virtual Result<uint64_t> allocate_pool_memory(uint64_t size,
                                                uint64_t alignment) = 0;
  virtual Status free_pool_memory(uint64_t addr) = 0;

  struct RefEntry {
    std::string key;
    ValueSlice value;
  };
  virtual Result<std::vector<RefEntry>> get_reference_vector() = 0;

  /* cursor == 0 starts a scan; the cursor is invalidated by any index
     mutation (UnknownCursor). NotFound signals end of scan. */
  virtual Result<RefEntry> iterate(uint64_t& cursor) = 0;

  /* Regex match against the sorted key digest; position advances past
     the returned key. NotFound when exhausted. */
  virtual Result<std::string> find_key(const std::string& pattern,
                                       uint64_t& position) = 0;

  virtual PoolInfo get_pool_info() = 0;

  /* Release the pair lock of an in-flight work item early. */
  virtual Status unlock(uint64_t work_id) = 0;

  /* Queue a background task (summarization, age-out) onto the pool's
     secondary worker. */
  virtual void defer(std::function<void()> task) = 0;
};

class IAdoPlugin {
 public:
  virtual ~IAdoPlugin() = default;

  virtual std::string name() const = 0;

  virtual Status do_work(Callbacks& cb, const WorkRequest& work,
                         std::vector<byte_buffer>& responses) = 0;

  /* Lifecycle: called when the pool is attached (after recovery) and
     before detach. */
  virtual void attached(Callbacks&) {}
  virtual void detaching(Callbacks&) {}
};

using PluginFactory = std::function<std::shared_ptr<IAdoPlugin>()>;

/* Plugins are compiled in and resolved by id; dynamic loading is out of
   scope. */
class PluginRegistry {
 public:
  static PluginRegistry& instance();

  void add(const std::string& plugin_id, PluginFactory factory);
  Result<std::shared_ptr<IAdoPlugin>> create(const std::string& plugin_id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PluginFactory> factories_;
};

struct PluginRegistration {
  PluginRegistration(const std::string& plugin_id, PluginFactory factory) {
    PluginRegistry::instance().add(plugin_id, std::move(factory));
  }
};

}  // namespace akv::ado

#endif
