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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iwan/nets.hpp"

namespace iwan {

inline constexpr int kCheckpointVersion = 1;

// A set of named networks plus free-form string metadata. Stored as JSON;
// doubles are written in shortest round-trip form so values reload bitwise.
struct Checkpoint {
  std::vector<Mlp> networks;
  std::map<std::string, std::string> metadata;

  const Mlp* find(const std::string& name) const;
  const Mlp& at(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iwan
