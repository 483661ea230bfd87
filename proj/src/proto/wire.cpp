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

#include "akv/proto/wire.hpp"

namespace akv::proto {

bool opcode_valid(uint8_t op) {
  return op >= uint8_t(Opcode::OpenPool) && op <= uint8_t(Opcode::Response);
}

byte_buffer encode_frame(Opcode op, uint64_t request_id, byte_span body,
                         uint16_t flags) {
  Writer w;
  w.u32(uint32_t(body.size() + (kFrameHeaderSize - kFramePrefixSize)));
  w.u8(kWireVersion);
  w.u8(uint8_t(op));
  w.u16(flags);
  w.u64(request_id);
  w.bytes(body);
  return w.take();
}

Result<size_t> try_decode_frame(byte_span data, Frame& out) {
  if (data.size() < kFramePrefixSize) return {Status::Ok, 0};
  uint32_t length = get_u32_le(data.data());
  if (length < kFrameHeaderSize - kFramePrefixSize || length > kMaxFrameLength)
    return {Status::ProtocolError, 0};
  if (data.size() < kFramePrefixSize + length) return {Status::Ok, 0};

  Reader r(data.subspan(kFramePrefixSize, length));
  out.version = r.u8();
  uint8_t op = r.u8();
  out.flags = r.u16();
  out.request_id = r.u64();
  if (out.version != kWireVersion) return {Status::ProtocolError, 0};
  if (!opcode_valid(op)) return {Status::ProtocolError, 0};
  if (out.flags != 0) return {Status::ProtocolError, 0}; /* reserved */
  out.opcode = Opcode(op);
  out.body = to_buffer(r.bytes(r.remaining()));
  return {Status::Ok, kFramePrefixSize + length};
}

byte_buffer encode_request_body(Opcode op, const RequestBody& b) {
  Writer w;
  w.u16(uint16_t(b.pool.size()));
  w.str(b.pool);
  switch (op) {
    case Opcode::OpenPool:
    case Opcode::DeletePool:
      break;
    case Opcode::CreatePool:
      w.u64(b.size);
      break;
    case Opcode::Put:
      w.u32(uint32_t(b.key.size()));
      w.bytes(b.key);
      w.u32(uint32_t(b.value.size()));
      w.bytes(b.value);
      break;
    case Opcode::Get:
    case Opcode::Erase:
      w.u32(uint32_t(b.key.size()));
      w.bytes(b.key);
      break;
    case Opcode::Resize:
      w.u32(uint32_t(b.key.size()));
      w.bytes(b.key);
      w.u64(b.size);
      break;
    case Opcode::InvokeAdo:
      w.u32(uint32_t(b.key.size()));
      w.bytes(b.key);
      w.u32(b.invoke_flags);
      w.u64(b.size);
      w.u32(uint32_t(b.request.size()));
      w.bytes(b.request);
      break;
    case Opcode::InvokePutAdo:
      w.u32(uint32_t(b.key.size()));
      w.bytes(b.key);
      w.u32(uint32_t(b.value.size()));
      w.bytes(b.value);
      w.u32(b.invoke_flags);
      w.u32(uint32_t(b.request.size()));
      w.bytes(b.request);
      break;
    case Opcode::Response:
      break;
  }
  return w.take();
}

bool decode_request_body(Opcode op, byte_span data, RequestBody& out) {
  Reader r(data);
  uint16_t pool_len = r.u16();
  out.pool = to_string(r.bytes(pool_len));
  switch (op) {
    case Opcode::OpenPool:
    case Opcode::DeletePool:
      break;
    case Opcode::CreatePool:
      out.size = r.u64();
      break;
    case Opcode::Put: {
      uint32_t kl = r.u32();
      out.key = to_buffer(r.bytes(kl));
      uint32_t vl = r.u32();
      out.value = to_buffer(r.bytes(vl));
      break;
    }
    case Opcode::Get:
    case Opcode::Erase: {
      uint32_t kl = r.u32();
      out.key = to_buffer(r.bytes(kl));
      break;
    }
    case Opcode::Resize: {
      uint32_t kl = r.u32();
      out.key = to_buffer(r.bytes(kl));
      out.size = r.u64();
      break;
    }
    case Opcode::InvokeAdo: {
      uint32_t kl = r.u32();
      out.key = to_buffer(r.bytes(kl));
      out.invoke_flags = r.u32();
      out.size = r.u64();
      uint32_t rl = r.u32();
      out.request = to_buffer(r.bytes(rl));
      break;
    }
    case Opcode::InvokePutAdo: {
      uint32_t kl = r.u32();
      out.key = to_buffer(r.bytes(kl));
      uint32_t vl = r.u32();
      out.value = to_buffer(r.bytes(vl));
      out.invoke_flags = r.u32();
      uint32_t rl = r.u32();
      out.request = to_buffer(r.bytes(rl));
      break;
    }
    case Opcode::Response:
      return false;
  }
  return r.ok() && r.remaining() == 0;
}

byte_buffer encode_response_body(const ResponseBody& b) {
  Writer w;
  w.u32(uint32_t(b.status));
  w.u32(uint32_t(b.payloads.size()));
  for (const byte_buffer& p : b.payloads) {
    w.u32(uint32_t(p.size()));
    w.bytes(p);
  }
  return w.take();
}

bool decode_response_body(byte_span data, ResponseBody& out) {
  Reader r(data);
  uint32_t st = r.u32();
  uint32_t n = r.u32();
  if (!r.ok() || st > uint32_t(Status::IoError)) return false;
  out.status = Status(st);
  out.payloads.clear();
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t len = r.u32();
    if (!r.ok()) return false;
    out.payloads.push_back(to_buffer(r.bytes(len)));
  }
  return r.ok() && r.remaining() == 0;
}

}  // namespace akv::proto
