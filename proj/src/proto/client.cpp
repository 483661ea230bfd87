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

#include "akv/proto/client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace akv::proto {

Result<std::unique_ptr<Client>> Client::connect(const std::string& host,
                                                uint16_t port,
                                                int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return {Status::IoError, nullptr};
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return {Status::ParameterError, nullptr};
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd);
    return {Status::IoError, nullptr};
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  auto c = std::unique_ptr<Client>(new Client());
  c->fd_ = fd;
  return {Status::Ok, std::move(c)};
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

Status Client::send_raw(byte_span bytes) {
  if (fd_ < 0) return Status::IoError;
  const std::byte* p = bytes.data();
  size_t n = bytes.size();
  while (n > 0) {
    ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
    if (w <= 0) return Status::IoError;
    p += w;
    n -= size_t(w);
  }
  return Status::Ok;
}

Result<ResponseBody> Client::roundtrip(Opcode op, const RequestBody& b) {
  if (fd_ < 0) return {Status::IoError, {}};
  uint64_t id = next_id_++;
  byte_buffer frame = encode_frame(op, id, encode_request_body(op, b));
  Status s = send_raw(frame);
  if (s != Status::Ok) return {s, {}};
  ++rtt_;

  std::byte chunk[64 * 1024];
  for (;;) {
    Frame f;
    auto consumed = try_decode_frame(rx_, f);
    if (!consumed.ok()) {
      ::close(fd_);
      fd_ = -1;
      return {Status::ProtocolError, {}};
    }
    if (consumed.value > 0) {
      rx_.erase(rx_.begin(), rx_.begin() + long(consumed.value));
      ResponseBody rb;
      if (f.opcode != Opcode::Response || !decode_response_body(f.body, rb)) {
        ::close(fd_);
        fd_ = -1;
        return {Status::ProtocolError, {}};
      }
      /* stale responses (for abandoned or out-of-band requests) are
         skipped; stop-and-wait means ids only move forward */
      if (f.request_id != id) continue;
      return {Status::Ok, std::move(rb)};
    }
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) {
      bool timed_out = n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK);
      ::close(fd_);
      fd_ = -1;
      return {timed_out ? Status::Timeout : Status::IoError, {}};
    }
    rx_.insert(rx_.end(), chunk, chunk + n);
  }
}

Status Client::open_pool(const std::string& pool) {
  RequestBody b;
  b.pool = pool;
  auto r = roundtrip(Opcode::OpenPool, b);
  return r.ok() ? r.value.status : r.status;
}

Status Client::create_pool(const std::string& pool, uint64_t size) {
  RequestBody b;
  b.pool = pool;
  b.size = size;
  auto r = roundtrip(Opcode::CreatePool, b);
  return r.ok() ? r.value.status : r.status;
}

Status Client::delete_pool(const std::string& pool) {
  RequestBody b;
  b.pool = pool;
  auto r = roundtrip(Opcode::DeletePool, b);
  return r.ok() ? r.value.status : r.status;
}

Status Client::put(const std::string& pool, byte_span key, byte_span value) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  b.value = to_buffer(value);
  auto r = roundtrip(Opcode::Put, b);
  return r.ok() ? r.value.status : r.status;
}

Result<byte_buffer> Client::get(const std::string& pool, byte_span key) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  auto r = roundtrip(Opcode::Get, b);
  if (!r.ok()) return {r.status, {}};
  if (r.value.status != Status::Ok) return {r.value.status, {}};
  if (r.value.payloads.size() != 1) return {Status::ProtocolError, {}};
  return {Status::Ok, std::move(r.value.payloads[0])};
}

Status Client::erase(const std::string& pool, byte_span key) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  auto r = roundtrip(Opcode::Erase, b);
  return r.ok() ? r.value.status : r.status;
}

Status Client::resize(const std::string& pool, byte_span key,
                      uint64_t new_size) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  b.size = new_size;
  auto r = roundtrip(Opcode::Resize, b);
  return r.ok() ? r.value.status : r.status;
}

Result<std::vector<byte_buffer>> Client::invoke_ado(const std::string& pool,
                                                    byte_span key,
                                                    byte_span request,
                                                    uint32_t flags,
                                                    uint64_t value_size) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  b.request = to_buffer(request);
  b.invoke_flags = flags;
  b.size = value_size;
  auto r = roundtrip(Opcode::InvokeAdo, b);
  if (!r.ok()) return {r.status, {}};
  return {r.value.status, std::move(r.value.payloads)};
}

Result<std::vector<byte_buffer>> Client::invoke_put_ado(
    const std::string& pool, byte_span key, byte_span value, byte_span request,
    uint32_t flags) {
  RequestBody b;
  b.pool = pool;
  b.key = to_buffer(key);
  b.value = to_buffer(value);
  b.request = to_buffer(request);
  b.invoke_flags = flags;
  auto r = roundtrip(Opcode::InvokePutAdo, b);
  if (!r.ok()) return {r.status, {}};
  return {r.value.status, std::move(r.value.payloads)};
}

Result<std::vector<byte_buffer>> ReplicaSet::replicated_invoke(
    const std::string& pool, byte_span key, byte_span request, uint32_t flags,
    uint64_t value_size) {
  if (stalled_) return {Status::ReplicaUnavailable, {}};
  std::vector<byte_buffer> first;
  for (size_t i = 0; i < replicas_.size(); ++i) {
    auto r = replicas_[i]->invoke_ado(pool, key, request, flags, value_size);
    if (r.status == Status::Timeout || r.status == Status::IoError) {
      stalled_ = true;
      return {Status::ReplicaUnavailable, {}};
    }
    if (!r.ok()) return {r.status, {}};
    if (i == 0) first = std::move(r.value);
  }
  return {Status::Ok, std::move(first)};
}

}  // namespace akv::proto
