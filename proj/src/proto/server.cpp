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

#include "akv/proto/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "akv/hash.hpp"

namespace akv::proto {

namespace {

bool send_all(int fd, const std::byte* p, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w <= 0) return false;
    p += w;
    n -= size_t(w);
  }
  return true;
}

}  // namespace

Server::Server(ServerConfig cfg) : cfg_(std::move(cfg)) {
  for (uint32_t i = 0; i < cfg_.shard_count; ++i) {
    store::ShardConfig sc;
    sc.shard_id = i;
    sc.shard_count = cfg_.shard_count;
    sc.data_dir = cfg_.data_dir;
    sc.pool_options = cfg_.pool_options;
    sc.plugins = cfg_.plugins;
    sc.synchronous_ado = cfg_.synchronous_ado;
    shards_.push_back(std::make_unique<store::Shard>(sc));
  }
}

Server::~Server() { stop(); }

store::Shard* Server::shard(uint32_t id) {
  return id < shards_.size() ? shards_[id].get() : nullptr;
}

Status Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) return Status::IoError;
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(cfg_.port);
  if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1)
    return Status::ParameterError;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    return Status::IoError;
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  accept_thread_ = std::thread([this] { accept_loop(); });
  return Status::Ok;
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard<std::mutex> l(conn_mu_);
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  while (active_conns_.load() > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

void Server::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_.load()) return;
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    {
      std::lock_guard<std::mutex> l(conn_mu_);
      conn_fds_.insert(fd);
    }
    ++active_conns_;
    std::thread([this, fd] {
      handle_connection(fd);
      {
        std::lock_guard<std::mutex> l(conn_mu_);
        conn_fds_.erase(fd);
      }
      ::close(fd);
      --active_conns_;
    }).detach();
  }
}

void Server::handle_connection(int fd) {
  byte_buffer buf;
  std::byte chunk[64 * 1024];
  for (;;) {
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return;
    buf.insert(buf.end(), chunk, chunk + n);
    for (;;) {
      Frame f;
      auto consumed = try_decode_frame(buf, f);
      if (!consumed.ok()) {
        /* broken envelope: resynchronization is impossible, drop the
           connection but never the server */
        ++malformed_frames_;
        return;
      }
      if (consumed.value == 0) break;
      buf.erase(buf.begin(), buf.begin() + long(consumed.value));
      byte_buffer resp = handle_frame(f);
      if (!send_all(fd, resp.data(), resp.size())) return;
    }
  }
}

byte_buffer Server::handle_frame(const Frame& f) {
  ++frames_handled_;
  ResponseBody rb;
  RequestBody req;
  if (f.opcode == Opcode::Response ||
      !decode_request_body(f.opcode, f.body, req)) {
    ++malformed_frames_;
    rb.status = Status::ProtocolError;
    return encode_frame(Opcode::Response, f.request_id,
                        encode_response_body(rb));
  }

  if (crashed_.load()) {
    rb.status = Status::IoError;
    return encode_frame(Opcode::Response, f.request_id,
                        encode_response_body(rb));
  }

  store::Shard& sh =
      *shards_[store::Shard::shard_of(req.pool, uint32_t(shards_.size()))];
  try {
    switch (f.opcode) {
      case Opcode::OpenPool:
        rb.status = sh.pool_open(req.pool);
        break;
      case Opcode::CreatePool:
        rb.status = sh.pool_create(req.pool, req.size);
        break;
      case Opcode::DeletePool:
        /* the server holds the open handle on behalf of clients */
        (void)sh.pool_close(req.pool);
        rb.status = sh.pool_delete(req.pool);
        break;
      case Opcode::Put:
        rb.status = sh.kv_put(req.pool, req.key, req.value);
        break;
      case Opcode::Get: {
        auto r = sh.kv_get(req.pool, req.key);
        rb.status = r.status;
        if (r.ok()) rb.payloads.push_back(std::move(r.value));
        break;
      }
      case Opcode::Erase:
        rb.status = sh.kv_erase(req.pool, req.key);
        break;
      case Opcode::Resize:
        rb.status = sh.kv_resize(req.pool, req.key, req.size);
        break;
      case Opcode::InvokeAdo: {
        auto r = sh.invoke_ado_sync(req.pool, req.key, req.request,
                                    req.invoke_flags, req.size);
        rb.status = r.status;
        if (r.ok()) rb.payloads = std::move(r.value);
        break;
      }
      case Opcode::InvokePutAdo: {
        auto r = sh.invoke_put_ado_sync(req.pool, req.key, req.value,
                                        req.request, req.invoke_flags);
        rb.status = r.status;
        if (r.ok()) rb.payloads = std::move(r.value);
        break;
      }
      case Opcode::Response:
        rb.status = Status::ProtocolError;
        break;
    }
  } catch (const CrashInjected&) {
    /* simulated power loss: freeze the store, drop in-flight answer */
    crashed_.store(true);
    if (store::Pool* p = sh.debug_pool(req.pool)) {
      SplitMix64 rng(0x0c7a5ull);
      p->materialize_crash(rng);
      p->poison();
    }
    rb.status = Status::IoError;
    rb.payloads.clear();
  } catch (const Error& e) {
    rb.status = e.status();
    rb.payloads.clear();
  } catch (const std::exception&) {
    rb.status = Status::IoError;
    rb.payloads.clear();
  }
  return encode_frame(Opcode::Response, f.request_id,
                      encode_response_body(rb));
}

Status Server::arm_crash(const std::string& pool, int64_t ops) {
  store::Shard& sh =
      *shards_[store::Shard::shard_of(pool, uint32_t(shards_.size()))];
  store::Pool* p = sh.debug_pool(pool);
  if (!p) return Status::NotFound;
  p->crash_clock()->arm(ops);
  return Status::Ok;
}

}  // namespace akv::proto
