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

#ifndef AKV_PROTO_SERVER_HPP
#define AKV_PROTO_SERVER_HPP

#include <atomic>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "akv/proto/wire.hpp"
#include "akv/store/shard.hpp"

namespace akv::proto {

struct ServerConfig {
  std::string host = "127.0.0.1";
  uint16_t port = 0; /* 0 picks an ephemeral port */
  uint32_t shard_count = 1;
  std::string data_dir;
  std::vector<std::string> plugins;
  bool synchronous_ado = false;
  store::PoolOptions pool_options;
};

/* TCP front end over a set of shards. One thread per connection; each
   request is routed to the shard owning its pool and answered with one
   response frame. A malformed envelope closes the connection; a
   malformed body gets a ProtocolError response. */
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();

  Status start();
  void stop();

  uint16_t port() const { return port_; }
  store::Shard* shard(uint32_t id);
  uint32_t shard_count() const { return uint32_t(shards_.size()); }

  uint64_t frames_handled() const { return frames_handled_.load(); }
  uint64_t malformed_frames() const { return malformed_frames_.load(); }

  /* Crash simulation: arm the named pool's clock; when it fires the
     shard's pool materializes a simulated power loss and the server
     refuses further work on it. */
  Status arm_crash(const std::string& pool, int64_t ops);

 private:
  void accept_loop();
  void handle_connection(int fd);
  byte_buffer handle_frame(const Frame& f);

  ServerConfig cfg_;
  std::vector<std::unique_ptr<store::Shard>> shards_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> crashed_{false};
  std::atomic<uint64_t> frames_handled_{0};
  std::atomic<uint64_t> malformed_frames_{0};

  std::mutex conn_mu_;
  std::set<int> conn_fds_;
  std::atomic<int> active_conns_{0};
};

}  // namespace akv::proto

#endif
