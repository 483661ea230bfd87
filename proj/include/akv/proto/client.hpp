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

#ifndef AKV_PROTO_CLIENT_HPP
#define AKV_PROTO_CLIENT_HPP

#include <memory>
#include <string>
#include <vector>

#include "akv/proto/wire.hpp"

namespace akv::proto {

/* Stop-and-wait client: one request in flight per connection, responses
   matched by request id. A receive timeout surfaces as Timeout and the
   connection is considered dead afterwards. */
class Client {
 public:
  static Result<std::unique_ptr<Client>> connect(const std::string& host,
                                                 uint16_t port,
                                                 int timeout_ms = 5000);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  Status open_pool(const std::string& pool);
  Status create_pool(const std::string& pool, uint64_t size);
  Status delete_pool(const std::string& pool);

  Status put(const std::string& pool, byte_span key, byte_span value);
  Result<byte_buffer> get(const std::string& pool, byte_span key);
  Status erase(const std::string& pool, byte_span key);
  Status resize(const std::string& pool, byte_span key, uint64_t new_size);

  Result<std::vector<byte_buffer>> invoke_ado(const std::string& pool,
                                              byte_span key, byte_span request,
                                              uint32_t flags = 0,
                                              uint64_t value_size = 0);
  Result<std::vector<byte_buffer>> invoke_put_ado(const std::string& pool,
                                                  byte_span key,
                                                  byte_span value,
                                                  byte_span request,
                                                  uint32_t flags = 0);

  /* Raw access for protocol robustness tests. */
  Status send_raw(byte_span bytes);

  uint64_t round_trips() const { return rtt_; }
  bool alive() const { return fd_ >= 0; }

 private:
  Client() = default;
  Result<ResponseBody> roundtrip(Opcode op, const RequestBody& b);

  int fd_ = -1;
  uint64_t next_id_ = 1;
  uint64_t rtt_ = 0;
  byte_buffer rx_;
};

/* Client-side primary-less replication: every replica must acknowledge
   each operation, in a fixed order, before the next operation starts.
   A silent replica therefore stalls the writer within one operation;
   after a failure the set refuses further writes rather than reorder. */
class ReplicaSet {
 public:
  explicit ReplicaSet(std::vector<Client*> replicas)
      : replicas_(std::move(replicas)) {}

  Result<std::vector<byte_buffer>> replicated_invoke(const std::string& pool,
                                                     byte_span key,
                                                     byte_span request,
                                                     uint32_t flags = 0,
                                                     uint64_t value_size = 0);
  bool stalled() const { return stalled_; }

 private:
  std::vector<Client*> replicas_;
  bool stalled_ = false;
};

}  // namespace akv::proto

#endif
