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

#ifndef AKV_BENCH_BENCH_HPP
#define AKV_BENCH_BENCH_HPP

#include <json.hpp>

#include <string>
#include <vector>

#include "akv/status.hpp"

namespace akv::bench {

/* Declarative experiment description; (seed, spec) fully determines the
   generated update stream. */
struct WorkloadSpec {
  uint64_t volumes = 1;
  uint64_t blocks_per_volume = 65536;
  uint32_t span_min = 1;
  uint32_t span_max = 100;
  uint32_t client_threads = 1; /* per shard in write scaling */
  uint64_t op_count = 20000;
  uint64_t seed = 1;
  std::string mode = "ado"; /* "ado" or "plain_kv" */
  uint32_t replication = 1;
  std::vector<uint32_t> shard_counts = {1, 2, 4};
  std::vector<uint64_t> quantum_sizes_mib = {4, 8, 16};
  uint64_t retention = 10;
  uint64_t query_count = 10;
  uint64_t query_range_blocks = 10000;

  static Result<WorkloadSpec> from_json_file(const std::string& path);
  static WorkloadSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/* Log-spaced latency buckets, 1 us .. 1 s, ten buckets per decade. */
class LatencyHistogram {
 public:
  static constexpr int kBuckets = 61;

  void record_us(double us);
  uint64_t count() const { return total_; }
  double max_us() const { return max_us_; }
  double percentile_us(double p) const; /* p in [0, 100] */
  nlohmann::json to_json() const;

 private:
  uint64_t buckets_[kBuckets] = {};
  uint64_t total_ = 0;
  double max_us_ = 0;
};

/* One experiment's output: a versioned JSON document plus flat CSV rows
   regenerable byte-identically from the same inputs. */
struct Report {
  nlohmann::json doc;
  Status write(const std::string& out_dir, const std::string& name) const;
};

/* Loopback write throughput per shard count, with the configured
   replication factor, sampled every 12,500 updates. */
Result<Report> run_write_scaling(const WorkloadSpec& spec,
                                 const std::string& work_dir);

/* Query latency per quantum size on a pre-filled volume; reports the
   distribution and the worst case. */
Result<Report> run_query_latency(const WorkloadSpec& spec,
                                 const std::string& work_dir);

/* One writer and one querier against the same shard. */
Result<Report> run_query_under_load(const WorkloadSpec& spec,
                                    const std::string& work_dir);

/* Resource footprint: in-store plugin vs per-record baseline, same
   update stream. */
Result<Report> run_footprint(const WorkloadSpec& spec,
                             const std::string& work_dir);

struct CrashVerdict {
  uint64_t points = 0;
  uint64_t violations = 0;
  bool completed = false; /* at least one arm outlived the whole script */
  std::vector<std::string> notes;
};

/* Crash-injection campaign over the update/seal/summarize/trim/kv_put
   paths; each point reopens the store and runs the invariant sweep. */
CrashVerdict run_crash_campaign(const WorkloadSpec& spec, uint64_t points,
                                const std::string& work_dir);

}  // namespace akv::bench

#endif
