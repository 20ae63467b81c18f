// Copyright 2026 The Jointcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JOINTCAST_SCENARIO_IO_HPP_
#define JOINTCAST_SCENARIO_IO_HPP_

#include "jointcast/scenario.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace jointcast
{

// Scenario file (UTF-8 JSON, one scenario per file):
//   {"scenario_id": str, "fps": 5, "meta": {str: str},
//    "road_points": [{"x", "y", "role": "Entrance"|"Exit"}],
//    "agents": [{"agent_id", "class", "frames": [{"t", "x", "y", "action", "lane": [6 ints]}]}]}
// lane = [left_turn, forward, right_turn, u_turn, lane_change, valid]; a -1 anywhere means unknown.

/// Parses and validates. `source` names the input in error messages.
Scenario parse_scenario(std::string_view text, std::string_view source = "<memory>");
Scenario load_scenario(const std::filesystem::path & path);
std::string serialize_scenario(const Scenario & s);
void save_scenario(const Scenario & s, const std::filesystem::path & path);

enum class Split : std::uint8_t { kTrain, kVal, kTest };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// Manifest: {"format": "jointcast-manifest", "version": 1,
//            "scenarios": [{"path": relative-or-absolute, "split": "train"|"val"|"test"}]}
struct ManifestEntry
{
  std::filesystem::path path;  // as written in the manifest
  Split split = Split::kTrain;
};

struct Manifest
{
  std::filesystem::path base_dir;  // directory relative paths resolve against
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry & e) const;
};

Manifest load_manifest(const std::filesystem::path & path);
void save_manifest(const Manifest & m, const std::filesystem::path & path);
std::vector<Scenario> load_split(const Manifest & m, Split split);

std::string read_text_file(const std::filesystem::path & path);
void write_text_file(const std::filesystem::path & path, std::string_view text);

}  // namespace jointcast

#endif  // JOINTCAST_SCENARIO_IO_HPP_
