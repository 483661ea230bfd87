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

#ifndef AKV_PROTO_WIRE_HPP
#define AKV_PROTO_WIRE_HPP

#include <string>
#include <vector>

#include "akv/bytes.hpp"
#include "akv/status.hpp"

namespace akv::proto {

/* Frame layout, all little endian:
     u32 length   (bytes after this field)
     u8  version  (kWireVersion)
     u8  opcode
     u16 flags    (reserved; must be zero)
     u64 request_id
     body (length - 12 bytes)
   A frame that violates the envelope closes the connection; a frame
   with a well-formed envelope but a bad body gets an error response. */
constexpr uint8_t kWireVersion = 1;
constexpr size_t kFramePrefixSize = 4;          /* the length field */
constexpr size_t kFrameHeaderSize = 16;         /* prefix + fixed header */
constexpr uint32_t kMaxFrameLength = 64u << 20; /* envelope sanity bound */

enum class Opcode : uint8_t {
  OpenPool = 1,
  CreatePool = 2,
  DeletePool = 3,
  Put = 4,
  Get = 5,
  Erase = 6,
  Resize = 7,
  InvokeAdo = 8,
  InvokePutAdo = 9,
  Response = 10,
};

bool opcode_valid(uint8_t op);

struct Frame {
  uint8_t version = kWireVersion;
  Opcode opcode = Opcode::Response;
  uint16_t flags = 0;
  uint64_t request_id = 0;
  byte_buffer body;
};

byte_buffer encode_frame(Opcode op, uint64_t request_id, byte_span body,
                         uint16_t flags = 0);

/* Incremental decode from the front of a receive buffer. Returns the
   bytes consumed; 0 means the frame is still incomplete. Throws nothing;
   envelope violations come back as ProtocolError. */
Result<size_t> try_decode_frame(byte_span data, Frame& out);

/* Request bodies. Fields are used per opcode:
     OpenPool, DeletePool:  pool
     CreatePool:            pool, size
     Put:                   pool, key, value
     Get, Erase:            pool, key
     Resize:                pool, key, size
     InvokeAdo:             pool, key, invoke_flags, size (value_size), request
     InvokePutAdo:          pool, key, value, invoke_flags, request */
struct RequestBody {
  std::string pool;
  byte_buffer key;
  byte_buffer value;
  uint64_t size = 0;
  uint32_t invoke_flags = 0;
  byte_buffer request;
};

byte_buffer encode_request_body(Opcode op, const RequestBody& b);
bool decode_request_body(Opcode op, byte_span data, RequestBody& out);

struct ResponseBody {
  Status status = Status::Ok;
  std::vector<byte_buffer> payloads;
};

byte_buffer encode_response_body(const ResponseBody& b);
bool decode_response_body(byte_span data, ResponseBody& out);

}  // namespace akv::proto

#endif
