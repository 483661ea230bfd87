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

#include "akv/ado/plugin.hpp"

namespace akv::ado {

PluginRegistry& PluginRegistry::instance() {
  static PluginRegistry reg;
  return reg;
}

void PluginRegistry::add(const std::string& plugin_id, PluginFactory factory) {
  factories_[plugin_id] = std::move(factory);
}

Result<std::shared_ptr<IAdoPlugin>> PluginRegistry::create(
    const std::string& plugin_id) const {
  auto it = factories_.find(plugin_id);
  if (it == factories_.end()) return {Status::PluginLoadError, nullptr};
  return {Status::Ok, it->second()};
}

std::vector<std::string> PluginRegistry::ids() const {
  std::vector<std::string> out;
  for (auto& [id, f] : factories_) out.push_back(id);
  return out;
}

}  // namespace akv::ado
