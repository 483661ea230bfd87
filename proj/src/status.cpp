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

#include "akv/status.hpp"

namespace akv {

const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "Ok";
    case Status::AlreadyExists: return "AlreadyExists";
    case Status::CapacityError: return "CapacityError";
    case Status::FormatError: return "FormatError";
    case Status::StateError: return "StateError";
    case Status::LogFull: return "LogFull";
    case Status::AlignmentError: return "AlignmentError";
    case Status::OutOfMemory: return "OutOfMemory";
    case Status::HeapCorruption: return "HeapCorruption";
    case Status::BoundsError: return "BoundsError";
    case Status::ParameterError: return "ParameterError";
    case Status::NotFound: return "NotFound";
    case Status::NameCollision: return "NameCollision";
    case Status::Busy: return "Busy";
    case Status::LockedByAdo: return "LockedByAdo";
    case Status::WrongShard: return "WrongShard";
    case Status::PluginError: return "PluginError";
    case Status::PluginLoadError: return "PluginLoadError";
    case Status::Timeout: return "Timeout";
    case Status::ReplicaUnavailable: return "ReplicaUnavailable";
    case Status::OrderingViolation: return "OrderingViolation";
    case Status::VolumeNotFound: return "VolumeNotFound";
    case Status::HistoryTrimmed: return "HistoryTrimmed";
    case Status::UnknownCursor: return "UnknownCursor";
    case Status::ProtocolError: return "ProtocolError";
    case Status::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace akv
