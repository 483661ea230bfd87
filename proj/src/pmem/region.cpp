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

#include "akv/pmem/region.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "akv/pmem/undo_log.hpp"

namespace akv::pmem {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'A', 'S', 'A', 'D', 'O', '1'};

/* header field offsets */
constexpr uint64_t kOffMagic = 0;
constexpr uint64_t kOffVersion = 8;
constexpr uint64_t kOffRoot = 16;
constexpr uint64_t kOffHeapMeta = 24;
constexpr uint64_t kOffUndoLog = 32;

constexpr uint64_t kMinHeapBytes = 1024;

void pwrite_all(int fd, const std::byte* p, size_t len, uint64_t off) {
  while (len > 0) {
    ssize_t n = ::pwrite(fd, p, len, off_t(off));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Status::IoError, "region pwrite failed");
    }
    p += n;
    len -= size_t(n);
    off += uint64_t(n);
  }
}

}  // namespace

std::unique_ptr<Region> Region::create(const std::string& path,
                                       uint64_t capacity,
                                       const RegionOptions& opts) {
  struct stat st;
  if (::stat(path.c_str(), &st) == 0)
    throw Error(Status::AlreadyExists, "region file exists: " + path);

  uint64_t heap_base =
      align_up(kHeaderSize + UndoLog::footprint(opts.undo_log_entries), 64);
  if (capacity < heap_base + kMinHeapBytes)
    throw Error(Status::CapacityError, "region capacity below minimum");

  auto r = std::unique_ptr<Region>(new Region());
  r->path_ = path;
  r->opts_ = opts;
  r->capacity_ = capacity;
  r->heap_base_ = heap_base;
  r->log_offset_ = kHeaderSize;
  r->working_.assign(capacity, std::byte{0});

  std::byte* h = r->working_.data();
  std::memcpy(h + kOffMagic, kMagic, 8);
  put_u32_le(h + kOffVersion, kFormatVersion);
  put_u64_le(h + kOffRoot, kNil);
  put_u64_le(h + kOffHeapMeta, heap_base);
  put_u64_le(h + kOffUndoLog, kHeaderSize);
  put_u64_le(h + kHeaderSize + 16, opts.undo_log_entries); /* log capacity */

  r->fd_ = ::open(path.c_str(), O_CREAT | O_EXCL | O_RDWR, 0644);
  if (r->fd_ < 0) throw Error(Status::IoError, "cannot create " + path);
  pwrite_all(r->fd_, r->working_.data(), r->working_.size(), 0);

  if (opts.simulate) {
    r->durable_ = r->working_;
    r->dirty_.assign((capacity / 8 + 63) / 64, 0);
  }
  return r;
}

std::unique_ptr<Region> Region::open(const std::string& path,
                                     const RegionOptions& opts) {
  int fd = ::open(path.c_str(), O_RDWR);
  if (fd < 0) throw Error(Status::NotFound, "region file missing: " + path);

  struct stat st;
  ::fstat(fd, &st);
  uint64_t size = uint64_t(st.st_size);
  if (size < kHeaderSize) {
    ::close(fd);
    throw Error(Status::FormatError, "region file truncated: " + path);
  }

  auto r = std::unique_ptr<Region>(new Region());
  r->path_ = path;
  r->opts_ = opts;
  r->capacity_ = size;
  r->fd_ = fd;
  r->working_.resize(size);

  uint64_t off = 0;
  while (off < size) {
    ssize_t n = ::pread(fd, r->working_.data() + off, size - off, off_t(off));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Status::IoError, "region pread failed");
    }
    if (n == 0) throw Error(Status::FormatError, "region short read");
    off += uint64_t(n);
  }

  r->load_header();
  if (opts.simulate) {
    r->durable_ = r->working_;
    r->dirty_.assign((size / 8 + 63) / 64, 0);
  }
  if (opts.recover_log) {
    UndoLog log(*r, r->log_offset_);
    log.recover();
  }
  return r;
}

void Region::load_header() {
  const std::byte* h = working_.data();
  if (std::memcmp(h + kOffMagic, kMagic, 8) != 0)
    throw Error(Status::FormatError, "bad region magic: " + path_);
  if (get_u32_le(h + kOffVersion) != kFormatVersion)
    throw Error(Status::FormatError, "unsupported region format version");

  heap_base_ = get_u64_le(h + kOffHeapMeta);
  log_offset_ = get_u64_le(h + kOffUndoLog);
  if (log_offset_ != kHeaderSize || heap_base_ > capacity_ ||
      heap_base_ < kHeaderSize)
    throw Error(Status::FormatError, "corrupt region header offsets");
}

Region::~Region() {
  try {
    close();
  } catch (...) {
  }
}

void Region::close() {
  if (fd_ < 0) return;
  if (!poisoned_) {
    pwrite_all(fd_, working_.data(), working_.size(), 0);
    ::fsync(fd_);
  }
  ::close(fd_);
  fd_ = -1;
}

void Region::check_bounds(uint64_t offset, uint64_t length) const {
  if (offset > capacity_ || length > capacity_ - offset)
    throw Error(Status::BoundsError, "region access out of range");
}

byte_span Region::read(uint64_t offset, uint64_t length) const {
  check_bounds(offset, length);
  return {working_.data() + offset, length};
}

void Region::mark_dirty(uint64_t offset, uint64_t length) {
  if (!opts_.simulate || length == 0) return;
  uint64_t w0 = offset / 8;
  uint64_t w1 = (offset + length + 7) / 8;
  for (uint64_t w = w0; w < w1; ++w) dirty_[w / 64] |= 1ull << (w % 64);
}

void Region::raw_write(uint64_t offset, const std::byte* src, uint64_t length) {
  std::memcpy(working_.data() + offset, src, length);
  mark_dirty(offset, length);
}

void Region::write(uint64_t offset, byte_span bytes) {
  if (crash_clock_) crash_clock_->tick();
  check_bounds(offset, bytes.size());
  raw_write(offset, bytes.data(), bytes.size());
}

void Region::fill_zero(uint64_t offset, uint64_t length) {
  if (crash_clock_) crash_clock_->tick();
  check_bounds(offset, length);
  std::memset(working_.data() + offset, 0, length);
  mark_dirty(offset, length);
}

void Region::atomic_store_u64(uint64_t offset, uint64_t value) {
  if (offset % 8 != 0)
    throw Error(Status::AlignmentError, "atomic store requires 8-byte alignment");
  if (crash_clock_) crash_clock_->tick();
  check_bounds(offset, 8);
  std::byte buf[8];
  put_u64_le(buf, value);
  raw_write(offset, buf, 8);
}

void Region::make_durable(uint64_t offset, uint64_t length) {
  if (length == 0) return;
  if (opts_.simulate) {
    uint64_t b0 = align_down(offset, 8);
    uint64_t b1 = std::min(align_up(offset + length, 8), capacity_);
    std::memcpy(durable_.data() + b0, working_.data() + b0, b1 - b0);
    for (uint64_t w = b0 / 8; w < b1 / 8; ++w)
      dirty_[w / 64] &= ~(1ull << (w % 64));
  } else {
    flush_file_range(offset, length);
  }
}

void Region::flush_file_range(uint64_t offset, uint64_t length) {
  pwrite_all(fd_, working_.data() + offset, length, offset);
}

void Region::persist(uint64_t offset, uint64_t length) {
  if (crash_clock_) crash_clock_->tick();
  check_bounds(offset, length);
  make_durable(offset, length);
}

uint64_t Region::root() const { return load_u64(kOffRoot); }

void Region::set_root(uint64_t offset) {
  atomic_store_u64(kOffRoot, offset);
  persist(kOffRoot, 8);
}

void Region::materialize_crash(SplitMix64& rng) {
  if (!opts_.simulate)
    throw Error(Status::StateError, "crash materialization needs simulate mode");

  byte_buffer image = durable_;
  for (uint64_t word = 0; word < capacity_ / 8; ++word) {
    if (dirty_[word / 64] & (1ull << (word % 64))) {
      if (rng.next_bool())
        std::memcpy(image.data() + word * 8, working_.data() + word * 8, 8);
    }
  }
  pwrite_all(fd_, image.data(), image.size(), 0);
  ::fsync(fd_);
  poisoned_ = true;
}

}  // namespace akv::pmem
