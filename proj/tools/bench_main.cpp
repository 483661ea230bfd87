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

#include <filesystem>
#include <iostream>

#include "akv/bench/bench.hpp"

namespace {

int run_experiment(const std::string& name, const std::string& spec_path,
                   const std::string& out_dir) {
  akv::bench::WorkloadSpec spec;
  if (!spec_path.empty()) {
    auto r = akv::bench::WorkloadSpec::from_json_file(spec_path);
    if (!r.ok()) {
      std::cerr << "cannot load spec: " << spec_path << "\n";
      return 1;
    }
    spec = r.value;
  }
  std::string work = out_dir + "/work";
  std::filesystem::create_directories(work);

  akv::Result<akv::bench::Report> rep;
  if (name == "write-scaling")
    rep = akv::bench::run_write_scaling(spec, work);
  else if (name == "query-latency")
    rep = akv::bench::run_query_latency(spec, work);
  else if (name == "query-load")
    rep = akv::bench::run_query_under_load(spec, work);
  else if (name == "footprint")
    rep = akv::bench::run_footprint(spec, work);
  else
    return 1;

  if (!rep.ok()) {
    std::cerr << name << " failed: " << akv::status_name(rep.status) << "\n";
    return 1;
  }
  if (rep.value.write(out_dir, name) != akv::Status::Ok) {
    std::cerr << "cannot write results to " << out_dir << "\n";
    return 1;
  }
  std::error_code ec;
  std::filesystem::remove_all(work, ec);
  std::cout << rep.value.doc.dump(2) << "\n";
  return 0;
}

int run_crash(const std::string& spec_path, const std::string& out_dir,
              uint64_t points) {
  akv::bench::WorkloadSpec spec;
  if (!spec_path.empty()) {
    auto r = akv::bench::WorkloadSpec::from_json_file(spec_path);
    if (!r.ok()) {
      std::cerr << "cannot load spec: " << spec_path << "\n";
      return 1;
    }
    spec = r.value;
  }
  std::string work = out_dir + "/work";
  std::filesystem::create_directories(work);
  auto v = akv::bench::run_crash_campaign(spec, points, work);

  akv::bench::Report rep;
  rep.doc = {{"schema_version", 1},
             {"experiment", "crash_campaign"},
             {"spec", spec.to_json()},
             {"points", v.points},
             {"violations", v.violations},
             {"completed", v.completed},
             {"notes", v.notes},
             {"csv",
              {{"header", {"points", "violations", "completed"}},
               {"rows", {{v.points, v.violations, v.completed}}}}}};
  if (rep.write(out_dir, "crash") != akv::Status::Ok) {
    std::cerr << "cannot write results to " << out_dir << "\n";
    return 1;
  }
  std::error_code ec;
  std::filesystem::remove_all(work, ec);
  std::cout << rep.doc.dump(2) << "\n";
  return v.violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"akv-bench: experiments over the store"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir = "bench-out";
  uint64_t crash_points = 200;

  for (const char* name : {"write-scaling", "query-latency", "query-load",
                           "footprint", "crash"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--spec", spec_path, "workload spec (JSON)");
    sub->add_option("--out", out_dir, "output directory");
    if (std::string(name) == "crash")
      sub->add_option("--points", crash_points, "minimum crash points");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string& cmd = app.get_subcommands()[0]->get_name();
  if (cmd == "crash") return run_crash(spec_path, out_dir, crash_points);
  return run_experiment(cmd, spec_path, out_dir);
}
