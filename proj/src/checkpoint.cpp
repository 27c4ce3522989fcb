/* Copyright 2026 The IWAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "iwan/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "iwan/error.hpp"
#include "json.hpp"

namespace iwan {

using json = nlohmann::ordered_json;

const Mlp* Checkpoint::find(const std::string& name) const {
  for (const auto& n : networks)
    if (n.name() == name) return &n;
  return nullptr;
}

const Mlp& Checkpoint::at(const std::string& name) const {
  if (const Mlp* n = find(name)) return *n;
  throw DataError("checkpoint has no network named '" + name + "'");
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  json doc;
  doc["format"] = "iwan-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["metadata"] = json::object();
  for (const auto& [k, v] : checkpoint.metadata) doc["metadata"][k] = v;
  doc["networks"] = json::array();
  for (const auto& net : checkpoint.networks) {
    json n;
    n["name"] = net.name();
    n["spec"] = {{"layer_widths", net.spec().layer_widths},
                 {"hidden_activation", "relu"},
                 {"output_head", to_string(net.spec().output_head)}};
    n["parameters"] = json::array();
    for (const auto* p : net.parameters()) {
      n["parameters"].push_back({{"name", p->name},
                                 {"rows", p->value.rows()},
                                 {"cols", p->value.cols()},
                                 {"values", std::vector<double>(p->value.values().begin(),
                                                                p->value.values().end())}});
    }
    doc["networks"].push_back(std::move(n));
  }
  return doc.dump(1);
}

Checkpoint parse_checkpoint(const std::string& text) {
  Checkpoint out;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "iwan-checkpoint") throw DataError("not an iwan checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    for (const auto& [k, v] : doc.at("metadata").items()) out.metadata[k] = v.get<std::string>();
    for (const auto& n : doc.at("networks")) {
      if (n.at("spec").at("hidden_activation") != "relu") {
        throw DataError("unsupported hidden activation");
      }
      MlpSpec spec{n.at("spec").at("layer_widths").get<std::vector<std::size_t>>(),
                   output_head_from_string(n.at("spec").at("output_head").get<std::string>())};
      Mlp net(n.at("name").get<std::string>(), spec);
      auto params = net.parameters();
      const auto& stored = n.at("parameters");
      if (stored.size() != params.size()) {
        throw DataError("network '" + net.name() + "': parameter count does not match spec");
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto values = stored[i].at("values").get<std::vector<double>>();
        Array2 value(stored[i].at("rows").get<std::size_t>(), stored[i].at("cols").get<std::size_t>(),
                     std::move(values));
        if (!value.same_shape(params[i]->value)) {
          throw DataError("network '" + net.name() + "': parameter " + params[i]->name +
                          " has shape " + value.shape_string() + ", spec requires " +
                          params[i]->value.shape_string());
        }
        params[i]->value = std::move(value);
      }
      out.networks.push_back(std::move(net));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f << serialize_checkpoint(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace iwan
