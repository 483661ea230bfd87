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

#ifndef AKV_CDP_PLUGIN_HPP
#define AKV_CDP_PLUGIN_HPP

#include <map>
#include <string>

#include "akv/ado/plugin.hpp"
#include "akv/cdp/format.hpp"

namespace akv::cdp {

/* Registered plugin id. */
inline constexpr const char* kCdpPluginId = "cdp";

/* Continuous-data-protection index plugin. Each KV pair whose value is a
   64-byte volume root anchors one volume: a crash-consistent doubly
   linked list of fixed-capacity time quanta of mapping records, with
   lazy summarization on the secondary worker and retention-driven
   age-out. */
class CdpPlugin : public ado::IAdoPlugin {
 public:
  std::string name() const override { return kCdpPluginId; }

  Status do_work(ado::Callbacks& cb, const ado::WorkRequest& work,
                 std::vector<byte_buffer>& responses) override;

 private:
  struct VolumeState {
    bool recovered = false;
    uint64_t next_seq = 1;
    uint64_t open_count = 0;
    uint64_t last_ts = 0;
  };

  Status ensure_volume(ado::Callbacks& cb, const std::string& key,
                       uint64_t root, VolumeState*& vs, bool allow_init);
  Status init_volume(ado::Callbacks& cb, uint64_t root, uint64_t qcap,
                     uint64_t retention, uint64_t mode, uint64_t age_limit);
  void recover_volume(ado::Callbacks& cb, uint64_t root, VolumeState& vs);

  Result<uint64_t> alloc_quantum(ado::Callbacks& cb, uint64_t qcap,
                                 uint64_t prev);
  Status seal_and_link(ado::Callbacks& cb, uint64_t root, VolumeState& vs);
  void summarize(ado::Callbacks& cb, uint64_t root, uint64_t quantum);

  Status op_update(ado::Callbacks& cb, const ado::WorkRequest& w,
                   byte_span body, std::vector<byte_buffer>& out);
  Status op_query(ado::Callbacks& cb, const ado::WorkRequest& w,
                  byte_span body, std::vector<byte_buffer>& out);
  Status op_trim(ado::Callbacks& cb, const ado::WorkRequest& w,
                 byte_span body, std::vector<byte_buffer>& out);
  Status op_configure(ado::Callbacks& cb, const ado::WorkRequest& w,
                      byte_span body, std::vector<byte_buffer>& out);
  Status op_digest(ado::Callbacks& cb, const ado::WorkRequest& w,
                   std::vector<byte_buffer>& out);

  std::map<std::string, VolumeState> volumes_;
};

}  // namespace akv::cdp

#endif
