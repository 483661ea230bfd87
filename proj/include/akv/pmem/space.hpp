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

#ifndef AKV_PMEM_SPACE_HPP
#define AKV_PMEM_SPACE_HPP

#include <cstdint>

#include "akv/bytes.hpp"

namespace akv::pmem {

/* Abstract persistent address space. A single region exposes its own
   offsets; a pool exposes packed (region, offset) addresses. The undo
   log is written against this interface so one log can cover
   multi-region transactions with a single commit point. */
struct Space {
  virtual ~Space() = default;

  virtual byte_span read(uint64_t addr, uint64_t length) const = 0;
  virtual void write(uint64_t addr, byte_span bytes) = 0;
  virtual void atomic_store_u64(uint64_t addr, uint64_t value) = 0;
  virtual void persist(uint64_t addr, uint64_t length) = 0;

  uint64_t load_u64(uint64_t addr) const {
    return get_u64_le(read(addr, 8).data());
  }
};

}  // namespace akv::pmem

#endif
