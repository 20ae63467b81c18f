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

#include "jointcast/scenario.hpp"

#include "jointcast/error.hpp"

#include <algorithm>
#include <set>

namespace jointcast
{
namespace
{

constexpr std::array<std::string_view, kVehicleActionCount> kVehicleActionNames = {
  "MovingOther", "Stopped", "Parked", "LaneChange", "TurnLeft", "TurnRight", "CutIn", "None"};
constexpr std::array<std::string_view, kPedestrianActionCount> kPedestrianActionNames = {
  "Moving", "WaitingToCross", "Crossing", "Stopped", "None"};
constexpr std::array<std::string_view, 8> kClassNames = {
  "Pedestrian", "Car", "Bus", "Truck", "Van", "Motorcyclist", "Bicyclist", "Other"};

std::string frame_context(const AgentTrack & track, std::size_t i)
{
  return "agent '" + track.agent_id + "' frame #" + std::to_string(i) + " (t=" +
         std::to_string(track.frames[i].t) + ")";
}

}  // namespace

AgentKind action_kind(const Action & a)
{
  return std::holds_alternative<VehicleAction>(a) ? AgentKind::kVehicle : AgentKind::kPedestrian;
}

int action_index(const Action & a)
{
  return std::visit([](auto v) { return static_cast<int>(v); }, a);
}

std::string_view action_name(const Action & a)
{
  if (const auto * v = std::get_if<VehicleAction>(&a)) {
    return kVehicleActionNames[static_cast<std::size_t>(*v)];
  }
  return kPedestrianActionNames[static_cast<std::size_t>(std::get<PedestrianAction>(a))];
}

Action parse_action(AgentKind kind, std::string_view name)
{
  if (kind == AgentKind::kVehicle) {
    for (std::size_t i = 0; i < kVehicleActionNames.size(); ++i) {
      if (kVehicleActionNames[i] == name) return static_cast<VehicleAction>(i);
    }
  } else {
    for (std::size_t i = 0; i < kPedestrianActionNames.size(); ++i) {
      if (kPedestrianActionNames[i] == name) return static_cast<PedestrianAction>(i);
    }
  }
  throw SchemaError(
    "unknown " + std::string(kind_name(kind)) + " action '" + std::string(name) + "'");
}

Action make_action(AgentKind kind, int index)
{
  if (index < 0 || index >= action_count(kind)) {
    throw SchemaError("action index " + std::to_string(index) + " out of range");
  }
  if (kind == AgentKind::kVehicle) return static_cast<VehicleAction>(index);
  return static_cast<PedestrianAction>(index);
}

int action_count(AgentKind kind)
{
  return kind == AgentKind::kVehicle ? kVehicleActionCount : kPedestrianActionCount;
}

int intent_class_count(AgentKind kind)
{
  return kind == AgentKind::kVehicle ? kVehicleIntentClasses : kPedestrianIntentClasses;
}

std::string_view class_name(AgentClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

AgentClass parse_class(std::string_view name)
{
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<AgentClass>(i);
  }
  throw SchemaError("unknown agent class '" + std::string(name) + "'");
}

std::string_view kind_name(AgentKind k)
{
  return k == AgentKind::kVehicle ? "vehicle" : "pedestrian";
}

std::array<int, 6> LaneFlags::encode() const
{
  return {left_turn, forward, right_turn, u_turn, lane_change, valid};
}

LaneFlags LaneFlags::decode(const std::array<int, 6> & v)
{
  for (int x : v) {
    if (x < -1 || x > 1) {
      throw SchemaError("lane flag value " + std::to_string(x) + " not in {-1, 0, 1}");
    }
  }
  if (std::find(v.begin(), v.end(), -1) != v.end()) return LaneFlags{};
  LaneFlags f;
  f.left_turn = v[0] == 1;
  f.forward = v[1] == 1;
  f.right_turn = v[2] == 1;
  f.u_turn = v[3] == 1;
  f.lane_change = v[4] == 1;
  f.valid = v[5] == 1;
  return f;
}

bool LaneFlags::consistent() const
{
  return valid || !(left_turn || forward || right_turn || u_turn || lane_change);
}

void validate(const Scenario & s)
{
  if (s.fps != kFps) {
    throw SchemaError("scenario '" + s.scenario_id + "': fps must be 5, got " + std::to_string(s.fps));
  }
  for (std::size_t i = 0; i < s.road_points.size(); ++i) {
    if (!s.road_points[i].position.finite()) {
      throw SchemaError("scenario '" + s.scenario_id + "': road point #" + std::to_string(i) +
                        " has a non-finite position");
    }
  }
  std::set<std::string> ids;
  for (const auto & track : s.tracks) {
    if (!ids.insert(track.agent_id).second) {
      throw SchemaError("scenario '" + s.scenario_id + "': duplicate agent id '" + track.agent_id + "'");
    }
    if (track.frames.empty()) {
      throw SchemaError("agent '" + track.agent_id + "' has no frames");
    }
    const AgentKind kind = track.kind();
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
      const FrameState & f = track.frames[i];
      if (i > 0) {
        const int prev = track.frames[i - 1].t;
        if (f.t <= prev) {
          throw SchemaError(frame_context(track, i) + ": frame indices out of order (previous t=" +
                            std::to_string(prev) + ")");
        }
        if (f.t != prev + 1) {
          throw SchemaError(frame_context(track, i) + ": gap in frame indices (previous t=" +
                            std::to_string(prev) + ")");
        }
      }
      if (!f.position.finite()) {
        throw SchemaError(frame_context(track, i) + ": non-finite position");
      }
      if (action_kind(f.action) != kind) {
        throw SchemaError(frame_context(track, i) + ": action '" + std::string(action_name(f.action)) +
                          "' does not belong to a " + std::string(kind_name(kind)));
      }
      if (!f.lane.consistent()) {
        throw SchemaError(frame_context(track, i) + ": lane permissions set on an invalid lane");
      }
      if (kind == AgentKind::kPedestrian && f.lane.valid) {
        throw SchemaError(frame_context(track, i) + ": pedestrians cannot carry valid lane info");
      }
    }
  }
}

std::vector<Action> derive_intentions(const AgentTrack & track, int q)
{
  std::vector<Action> labels;
  const std::size_t n = track.frames.size();
  labels.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t src = std::min(m + static_cast<std::size_t>(std::max(q, 0)), n - 1);
    labels.push_back(track.frames[src].action);
  }
  return labels;
}

bool contains_cut_in(const PredictionWindow & w)
{
  const Action cut_in = VehicleAction::kCutIn;
  for (const auto & f : w.fut) {
    if (f.action == cut_in) return true;
  }
  return std::find(w.fut_intent.begin(), w.fut_intent.end(), cut_in) != w.fut_intent.end();
}

std::vector<PredictionWindow> window_scenario(const Scenario & s)
{
  std::vector<PredictionWindow> out;
  for (const auto & track : s.tracks) {
    const int n = static_cast<int>(track.frames.size());
    if (n < kWindowFrames) continue;
    const std::vector<Action> intents = derive_intentions(track, kIntentLead);
    for (int start = 0; start + kWindowFrames <= n; ++start) {
      PredictionWindow w;
      w.scenario_id = s.scenario_id;
      w.agent_id = track.agent_id;
      w.kind = track.kind();
      for (int i = 0; i < kObsFrames; ++i) w.obs[i] = track.frames[start + i];
      for (int i = 0; i < kFutFrames; ++i) {
        w.fut[i] = track.frames[start + kObsFrames + i];
        w.fut_intent[i] = intents[start + kObsFrames + i];
      }
      w.anchor_t = w.obs.back().t;
      w.origin = w.obs.back().position;
      if (contains_cut_in(w)) continue;
      for (const auto & other : s.tracks) {
        if (other.agent_id == track.agent_id || other.frames.empty()) continue;
        if (other.frames.front().t <= w.anchor_t && other.frames.back().t >= w.anchor_t) {
          w.neighbors.push_back(other.agent_id);
        }
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

ObservationMatrix encode_frame_features(const PredictionWindow & w)
{
  ObservationMatrix m = ObservationMatrix::Zero();
  const Action veh_none = VehicleAction::kNone;
  const Action ped_none = PedestrianAction::kNone;
  for (int i = 0; i < kObsFrames; ++i) {
    const FrameState & f = w.obs[i];
    const Vec2 rel = f.position - w.origin;
    m(i, 0) = rel.x;
    m(i, 1) = rel.y;
    const int veh = action_index(w.kind == AgentKind::kVehicle ? f.action : veh_none);
    const int ped = action_index(w.kind == AgentKind::kPedestrian ? f.action : ped_none);
    m(i, 2 + veh) = 1.0;
    m(i, 2 + kVehicleActionCount + ped) = 1.0;
    const auto lane = f.lane.encode();
    for (int k = 0; k < 6; ++k) {
      m(i, 2 + kVehicleActionCount + kPedestrianActionCount + k) = lane[k];
    }
  }
  return m;
}

std::vector<SceneSample> group_scenes(const Scenario & s, std::vector<PredictionWindow> windows)
{
  std::map<int, SceneSample> by_anchor;
  for (auto & w : windows) {
    auto & scene = by_anchor[w.anchor_t];
    scene.scenario_id = s.scenario_id;
    scene.anchor_t = w.anchor_t;
    scene.windows.push_back(std::move(w));
  }
  std::vector<SceneSample> out;
  out.reserve(by_anchor.size());
  for (auto & [t, scene] : by_anchor) {
    scene.road_points = s.road_points;
    out.push_back(std::move(scene));
  }
  return out;
}

std::vector<SceneSample> build_scenes(const Scenario & s)
{
  return group_scenes(s, window_scenario(s));
}

}  // namespace jointcast
