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

#ifndef JOINTCAST_SCENARIO_HPP_
#define JOINTCAST_SCENARIO_HPP_

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace jointcast
{

inline constexpr int kFps = 5;
inline constexpr int kObsFrames = 15;     // 3 s
inline constexpr int kFutFrames = 25;     // 5 s
inline constexpr int kWindowFrames = kObsFrames + kFutFrames;
inline constexpr int kIntentLead = 4;     // intention = action q frames ahead
inline constexpr int kFeatureWidth = 21;  // 2 position + 8 vehicle + 5 pedestrian + 6 lane

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

enum class AgentKind : std::uint8_t { kVehicle, kPedestrian };

enum class AgentClass : std::uint8_t {
  kPedestrian,
  kCar,
  kBus,
  kTruck,
  kVan,
  kMotorcyclist,
  kBicyclist,
  kOther,
};

constexpr AgentKind kind_of(AgentClass c)
{
  return c == AgentClass::kPedestrian ? AgentKind::kPedestrian : AgentKind::kVehicle;
}

// Index order is the one-hot / logit order used by the model.
enum class VehicleAction : std::uint8_t {
  kMovingOther,
  kStopped,
  kParked,
  kLaneChange,
  kTurnLeft,
  kTurnRight,
  kCutIn,
  kNone,
};
inline constexpr int kVehicleActionCount = 8;
/// Classes the vehicle intention head may predict (CutIn and None excluded).
inline constexpr int kVehicleIntentClasses = 6;

enum class PedestrianAction : std::uint8_t {
  kMoving,
  kWaitingToCross,
  kCrossing,
  kStopped,
  kNone,
};
inline constexpr int kPedestrianActionCount = 5;
inline constexpr int kPedestrianIntentClasses = 4;

/// An action label. The alternative held always agrees with the owning agent's kind.
using Action = std::variant<VehicleAction, PedestrianAction>;

AgentKind action_kind(const Action & a);
int action_index(const Action & a);
std::string_view action_name(const Action & a);
/// Throws SchemaError for names that are not valid for `kind`.
Action parse_action(AgentKind kind, std::string_view name);
Action make_action(AgentKind kind, int index);
int action_count(AgentKind kind);
int intent_class_count(AgentKind kind);

std::string_view class_name(AgentClass c);
AgentClass parse_class(std::string_view name);
std::string_view kind_name(AgentKind k);

/// Lane permissions plus a validity bit. Invalid lanes carry all-zero permissions.
struct LaneFlags
{
  bool left_turn = false;
  bool forward = false;
  bool right_turn = false;
  bool u_turn = false;
  bool lane_change = false;
  bool valid = false;

  std::array<int, 6> encode() const;
  /// Accepts the 6-slot encoding; any -1 entry means "unknown" and yields an invalid lane.
  static LaneFlags decode(const std::array<int, 6> & v);
  bool consistent() const;
  friend bool operator==(const LaneFlags &, const LaneFlags &) = default;
};

struct FrameState
{
  int t = 0;  // frame index at kFps
  Vec2 position;
  Action action = VehicleAction::kNone;
  LaneFlags lane;

  friend bool operator==(const FrameState &, const FrameState &) = default;
};

struct AgentTrack
{
  std::string agent_id;
  AgentClass agent_class = AgentClass::kCar;
  std::vector<FrameState> frames;

  AgentKind kind() const { return kind_of(agent_class); }
  friend bool operator==(const AgentTrack &, const AgentTrack &) = default;
};

enum class RoadRole : std::uint8_t { kEntrance, kExit };

struct RoadPoint
{
  Vec2 position;
  RoadRole role = RoadRole::kEntrance;

  friend bool operator==(const RoadPoint &, const RoadPoint &) = default;
};

struct Scenario
{
  std::string scenario_id;
  int fps = kFps;
  std::map<std::string, std::string> meta;
  std::vector<RoadPoint> road_points;
  std::vector<AgentTrack> tracks;

  friend bool operator==(const Scenario &, const Scenario &) = default;
};

/// Throws SchemaError naming the offending track/frame if any type invariant fails.
void validate(const Scenario & s);

/// One training/evaluation instance for one agent.
struct PredictionWindow
{
  std::string scenario_id;
  std::string agent_id;
  AgentKind kind = AgentKind::kVehicle;
  int anchor_t = 0;  // frame index of the last observed frame
  std::array<FrameState, kObsFrames> obs;
  std::array<FrameState, kFutFrames> fut;
  std::array<Action, kFutFrames> fut_intent;
  std::vector<std::string> neighbors;
  Vec2 origin;  // position at the last observed frame
};

/// label[m] = action[m + q], clamped to the final action near the end of the track.
std::vector<Action> derive_intentions(const AgentTrack & track, int q);

/// True if the window's future actions or future intentions contain CutIn.
bool contains_cut_in(const PredictionWindow & w);

/// Stride-1 windows over every track with at least kWindowFrames frames; CutIn windows dropped.
std::vector<PredictionWindow> window_scenario(const Scenario & s);

using ObservationMatrix = Eigen::Matrix<double, kObsFrames, kFeatureWidth, Eigen::RowMajor>;

/// Per observed frame: [position - origin (2), vehicle one-hot (8), pedestrian one-hot (5), lane (6)].
ObservationMatrix encode_frame_features(const PredictionWindow & w);

/// All windows of one scenario that share an anchor frame; the unit the model forecasts jointly.
struct SceneSample
{
  std::string scenario_id;
  int anchor_t = 0;
  std::vector<PredictionWindow> windows;
  std::vector<RoadPoint> road_points;
};

std::vector<SceneSample> group_scenes(const Scenario & s, std::vector<PredictionWindow> windows);
std::vector<SceneSample> build_scenes(const Scenario & s);

}  // namespace jointcast

#endif  // JOINTCAST_SCENARIO_HPP_
