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

#ifndef AKV_CDP_PLAINKV_HPP
#define AKV_CDP_PLAINKV_HPP

#include <string>
#include <vector>

#include "akv/cdp/format.hpp"
#include "akv/status.hpp"

namespace akv::cdp {

/* Remote KV surface used by the client-side baseline. Each call is one
   network round trip; the counter is what the traffic comparison against
   the in-store plugin measures. */
class KvTransport {
 public:
  virtual ~KvTransport() = default;
  virtual Status put(const std::string& key, byte_span value) = 0;
  virtual Result<byte_buffer> get(const std::string& key) = 0;
  virtual Status erase(const std::string& key) = 0;
  virtual uint64_t round_trips() const = 0;
};

/* Baseline implementation of the versioned block index with no server
   side logic: every mapping record is an individual KV pair, the working
   state lives in client DRAM, and durability comes from writing each
   record through before acknowledging. Retention follows the same
   quantum grouping as the in-store plugin so the two stay answer- and
   digest-identical on the same op stream. */
class PlainKvVolume {
 public:
  PlainKvVolume(KvTransport& kv, std::string name);

  /* Rebuild DRAM state from the store: manifest, then probe record
     pairs upward until the first gap. */
  Status load();

  Status configure(uint64_t qcap, uint64_t retention, uint64_t mode,
                   uint64_t age_limit);
  Result<uint64_t> update(uint64_t virt, uint32_t len, uint64_t managed,
                          uint64_t ts);
  Result<BlockMap> query(uint64_t t);
  Result<BlockMap> query(uint64_t t, uint64_t range_virt,
                         uint64_t range_len);
  Result<uint64_t> trim(uint64_t now);
  Result<uint64_t> digest();

  /* footprint accounting: client-side working state */
  uint64_t client_volatile_bytes() const {
    return records_.size() * sizeof(Rec) + base_.size() * sizeof(MapEntry);
  }
  uint64_t record_count() const { return records_.size(); }

 private:
  struct Rec {
    uint64_t virt = 0;
    uint32_t len = 0;
    uint64_t managed = 0;
    uint64_t ts = 0;
    uint64_t seq = 0;
  };

  std::string record_key(uint64_t seq) const;
  std::string manifest_key() const;
  Status write_manifest();
  uint64_t quantum_list_length() const;
  Status ensure_init(bool allow_init);

  KvTransport& kv_;
  std::string name_;

  bool loaded_ = false;
  bool initialized_ = false;
  uint64_t qcap_ = kDefaultQuantumCapacity;
  uint64_t retention_ = kDefaultRetention;
  uint64_t mode_ = kRetentionCount;
  uint64_t age_limit_ = 0;
  uint64_t trimmed_before_ = 0;
  uint64_t next_seq_ = 1;
  uint64_t last_ts_ = 0;
  BlockMap base_; /* merged effect of trimmed history */
  std::vector<Rec> records_;
};

}  // namespace akv::cdp

#endif
