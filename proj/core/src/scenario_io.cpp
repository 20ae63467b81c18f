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

#include "jointcast/scenario_io.hpp"

#include "jointcast/error.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <sstream>

namespace jointcast
{
namespace
{

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string line_col(std::string_view text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Field accessors that report the JSON path on failure.
const json & field(const json & obj, const char * key, const std::string & path)
{
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + ": missing field '" + key + "'");
  return *it;
}

std::string get_string(const json & obj, const char * key, const std::string & path)
{
  const json & v = field(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

double get_number(const json & obj, const char * key, const std::string & path)
{
  const json & v = field(obj, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key + ": expected a number");
  return v.get<double>();
}

int get_int(const json & obj, const char * key, const std::string & path)
{
  const json & v = field(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError(path + "." + key + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw SchemaError(path + "." + key + ": integer out of range");
  }
  return static_cast<int>(x);
}

const json & get_array(const json & obj, const char * key, const std::string & path)
{
  const json & v = field(obj, key, path);
  if (!v.is_array()) throw SchemaError(path + "." + key + ": expected an array");
  return v;
}

RoadRole parse_role(const std::string & s, const std::string & path)
{
  if (s == "Entrance") return RoadRole::kEntrance;
  if (s == "Exit") return RoadRole::kExit;
  throw SchemaError(path + ": unknown road role '" + s + "'");
}

const char * role_name(RoadRole r) { return r == RoadRole::kEntrance ? "Entrance" : "Exit"; }

Scenario from_json(const json & root)
{
  Scenario s;
  const std::string top = "$";
  s.scenario_id = get_string(root, "scenario_id", top);
  s.fps = get_int(root, "fps", top);
  if (auto it = root.find("meta"); it != root.end()) {
    if (!it->is_object()) throw SchemaError("$.meta: expected an object");
    for (const auto & [k, v] : it->items()) {
      s.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  const json & roads = get_array(root, "road_points", top);
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const std::string path = "$.road_points[" + std::to_string(i) + "]";
    RoadPoint rp;
    rp.position = {get_number(roads[i], "x", path), get_number(roads[i], "y", path)};
    rp.role = parse_role(get_string(roads[i], "role", path), path + ".role");
    s.road_points.push_back(rp);
  }
  const json & agents = get_array(root, "agents", top);
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const std::string apath = "$.agents[" + std::to_string(a) + "]";
    AgentTrack track;
    track.agent_id = get_string(agents[a], "agent_id", apath);
    try {
      track.agent_class = parse_class(get_string(agents[a], "class", apath));
    } catch (const SchemaError & e) {
      throw SchemaError(apath + ".class: " + e.what());
    }
    const AgentKind kind = track.kind();
    const json & frames = get_array(agents[a], "frames", apath);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::string fpath = apath + ".frames[" + std::to_string(i) + "]";
      FrameState f;
      f.t = get_int(frames[i], "t", fpath);
      f.position = {get_number(frames[i], "x", fpath), get_number(frames[i], "y", fpath)};
      try {
        f.action = parse_action(kind, get_string(frames[i], "action", fpath));
      } catch (const SchemaError & e) {
        throw SchemaError(fpath + ".action (agent '" + track.agent_id + "'): " + e.what());
      }
      const json & lane = get_array(frames[i], "lane", fpath);
      if (lane.size() != 6) throw SchemaError(fpath + ".lane: expected 6 integers");
      std::array<int, 6> raw{};
      for (std::size_t k = 0; k < 6; ++k) {
        if (!lane[k].is_number_integer()) throw SchemaError(fpath + ".lane: expected integers");
        const auto v = lane[k].get<std::int64_t>();
        if (v < -1 || v > 1) throw SchemaError(fpath + ".lane: values must be -1, 0 or 1");
        raw[k] = static_cast<int>(v);
      }
      f.lane = LaneFlags::decode(raw);
      track.frames.push_back(f);
    }
    s.tracks.push_back(std::move(track));
  }
  validate(s);
  return s;
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view source)
{
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error & e) {
    throw SchemaError(std::string(source) + ": JSON parse error at " + line_col(text, e.byte - 1) +
                      ": " + e.what());
  } catch (const json::exception & e) {
    throw SchemaError(std::string(source) + ": " + e.what());
  }
  try {
    return from_json(root);
  } catch (const SchemaError & e) {
    throw SchemaError(std::string(source) + ": " + e.what());
  } catch (const json::exception & e) {
    throw SchemaError(std::string(source) + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path & path)
{
  return parse_scenario(read_text_file(path), path.string());
}

std::string serialize_scenario(const Scenario & s)
{
  ordered_json root;
  root["scenario_id"] = s.scenario_id;
  root["fps"] = s.fps;
  ordered_json meta = ordered_json::object();
  for (const auto & [k, v] : s.meta) meta[k] = v;
  root["meta"] = meta;
  ordered_json roads = ordered_json::array();
  for (const auto & rp : s.road_points) {
    roads.push_back({{"x", rp.position.x}, {"y", rp.position.y}, {"role", role_name(rp.role)}});
  }
  root["road_points"] = roads;
  ordered_json agents = ordered_json::array();
  for (const auto & track : s.tracks) {
    ordered_json frames = ordered_json::array();
    for (const auto & f : track.frames) {
      frames.push_back({{"t", f.t},
                        {"x", f.position.x},
                        {"y", f.position.y},
                        {"action", std::string(action_name(f.action))},
                        {"lane", f.lane.encode()}});
    }
    agents.push_back({{"agent_id", track.agent_id},
                      {"class", std::string(class_name(track.agent_class))},
                      {"frames", frames}});
  }
  root["agents"] = agents;
  return root.dump(1) + "\n";
}

void save_scenario(const Scenario & s, const std::filesystem::path & path)
{
  write_text_file(path, serialize_scenario(s));
}

std::string_view split_name(Split s)
{
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name)
{
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw SchemaError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

std::filesystem::path Manifest::resolve(const ManifestEntry & e) const
{
  return e.path.is_absolute() ? e.path : base_dir / e.path;
}

Manifest load_manifest(const std::filesystem::path & path)
{
  const std::string text = read_text_file(path);
  Manifest m;
  m.base_dir = path.parent_path();
  try {
    const json root = json::parse(text);
    if (get_string(root, "format", "$") != "jointcast-manifest") {
      throw SchemaError("$.format: not a jointcast manifest");
    }
    if (get_int(root, "version", "$") != 1) throw SchemaError("$.version: unsupported version");
    const json & list = get_array(root, "scenarios", "$");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "$.scenarios[" + std::to_string(i) + "]";
      ManifestEntry e;
      e.path = get_string(list[i], "path", p);
      e.split = parse_split(get_string(list[i], "split", p));
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception & e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const SchemaError & e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const Manifest & m, const std::filesystem::path & path)
{
  ordered_json root;
  root["format"] = "jointcast-manifest";
  root["version"] = 1;
  ordered_json list = ordered_json::array();
  for (const auto & e : m.entries) {
    list.push_back({{"path", e.path.generic_string()}, {"split", std::string(split_name(e.split))}});
  }
  root["scenarios"] = list;
  write_text_file(path, root.dump(1) + "\n");
}

std::vector<Scenario> load_split(const Manifest & m, Split split)
{
  std::vector<Scenario> out;
  for (const auto & e : m.entries) {
    if (e.split == split) out.push_back(load_scenario(m.resolve(e)));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path & path, std::string_view text)
{
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace jointcast
