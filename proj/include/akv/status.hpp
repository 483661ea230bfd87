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

#ifndef AKV_STATUS_HPP
#define AKV_STATUS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace akv {

enum class Status : int32_t {
  Ok = 0,
  AlreadyExists,
  CapacityError,
  FormatError,
  StateError,
  LogFull,
  AlignmentError,
  OutOfMemory,
  HeapCorruption,
  BoundsError,
  ParameterError,
  NotFound,
  NameCollision,
  Busy,
  LockedByAdo,
  WrongShard,
  PluginError,
  PluginLoadError,
  Timeout,
  ReplicaUnavailable,
  OrderingViolation,
  VolumeNotFound,
  HistoryTrimmed,
  UnknownCursor,
  ProtocolError,
  IoError,
};

const char* status_name(Status s);

/* Hard errors (format corruption, precondition violations) are thrown;
   expected conditions (NotFound, OutOfMemory, ...) travel as Status. */
class Error : public std::runtime_error {
 public:
  Error(Status s, const std::string& what)
      : std::runtime_error(what), status_(s) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

/* Thrown by the simulated-persistence backend when an injected crash
   point fires. Unwinds to the crash harness, which materializes the
   crash image and reopens. */
class CrashInjected : public std::exception {
 public:
  const char* what() const noexcept override { return "injected crash"; }
};

template <typename T>
struct Result {
  Status status = Status::Ok;
  T value{};

  bool ok() const { return status == Status::Ok; }
};

}  // namespace akv

#endif
