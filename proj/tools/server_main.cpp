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

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "akv/proto/server.hpp"

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"akv-server: sharded KV store over emulated persistent memory"};

  std::string config_path;
  uint32_t shards_override = 0;
  std::string crash_point; /* "<pool>:<op-count>", debugging aid */
  app.add_option("--config", config_path, "JSON server config");
  app.add_option("--shards", shards_override,
                 "override the configured shard count");
  app.add_option("--crash-point", crash_point,
                 "arm a crash after N persistence ops on POOL (POOL:N)");
  CLI11_PARSE(app, argc, argv);

  akv::proto::ServerConfig cfg;
  cfg.data_dir = ".";
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot read config: " << config_path << "\n";
      return 1;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "bad config: " << e.what() << "\n";
      return 1;
    }
    cfg.host = j.value("host", cfg.host);
    cfg.port = j.value("port", cfg.port);
    cfg.shard_count = j.value("shards", cfg.shard_count);
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    if (j.contains("plugins"))
      cfg.plugins = j["plugins"].get<std::vector<std::string>>();
    cfg.synchronous_ado = j.value("synchronous_ado", cfg.synchronous_ado);
    cfg.pool_options.initial_size =
        j.value("pool_initial_mib", uint64_t(64)) << 20;
    cfg.pool_options.expansion_size =
        j.value("pool_expansion_mib", uint64_t(64)) << 20;
    cfg.pool_options.simulate = j.value("simulate", true);
  }
  if (shards_override) cfg.shard_count = shards_override;

  akv::proto::Server server(cfg);
  if (server.start() != akv::Status::Ok) {
    std::cerr << "failed to listen on " << cfg.host << ":" << cfg.port << "\n";
    return 1;
  }
  std::cout << "listening on " << cfg.host << ":" << server.port() << " ("
            << cfg.shard_count << " shards)\n";

  if (!crash_point.empty()) {
    auto colon = crash_point.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "bad --crash-point, expected POOL:N\n";
      return 1;
    }
    std::string pool = crash_point.substr(0, colon);
    int64_t ops = std::stoll(crash_point.substr(colon + 1));
    /* the pool must exist already; clients normally create it first */
    if (server.arm_crash(pool, ops) != akv::Status::Ok)
      std::cerr << "crash point not armed: pool " << pool << " not open\n";
    else
      std::cout << "crash armed: " << pool << " after " << ops << " ops\n";
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}
