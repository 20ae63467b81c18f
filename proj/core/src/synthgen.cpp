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

#include "jointcast/synthgen.hpp"

#include "jointcast/error.hpp"
#include "jointcast/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

namespace jointcast::synth
{
namespace
{

constexpr Vec2 kArmDir[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
constexpr double kPedestrianStandShare = 0.15;
constexpr double kFarEnough = 1000.0;

Vec2 left_of(Vec2 h) { return {-h.y, h.x}; }
Vec2 right_of(Vec2 h) { return {h.y, -h.x}; }

struct Segment
{
  enum class Type { kLine, kArc, kBlend };
  Type type = Type::kLine;
  double length = 0.0;
  Vec2 p0;
  Vec2 dir;
  Vec2 lateral;
  Vec2 center;
  double radius = 0.0;
  double a0 = 0.0;
  double turn = 0.0;  // +1 counter-clockwise, -1 clockwise
  Action label;

  Vec2 at(double s) const
  {
    switch (type) {
      case Type::kLine:
        return p0 + s * dir;
      case Type::kBlend: {
        const double u = std::clamp(s / length, 0.0, 1.0);
        return p0 + s * dir + (u * u * (3.0 - 2.0 * u)) * lateral;
      }
      case Type::kArc: {
        const double a = a0 + turn * s / radius;
        return center + Vec2{radius * std::cos(a), radius * std::sin(a)};
      }
    }
    return p0;
  }
};

/// Arc-length parametrised path built from lines, lane-change blends and quarter arcs.
class Path
{
public:
  Path(Vec2 start, Vec2 heading) : cursor_(start), heading_(heading) {}

  void line(double length, Action label)
  {
    Segment s;
    s.length = length;
    s.p0 = cursor_;
    s.dir = heading_;
    s.label = label;
    push(s);
  }

  void blend(double length, Vec2 lateral, Action label)
  {
    Segment s;
    s.type = Segment::Type::kBlend;
    s.length = length;
    s.p0 = cursor_;
    s.dir = heading_;
    s.lateral = lateral;
    s.label = label;
    push(s);
  }

  void quarter_turn(double radius, bool left, Action label)
  {
    Segment s;
    s.type = Segment::Type::kArc;
    s.radius = radius;
    s.turn = left ? 1.0 : -1.0;
    s.center = cursor_ + radius * (left ? left_of(heading_) : right_of(heading_));
    const Vec2 rel = cursor_ - s.center;
    s.a0 = std::atan2(rel.y, rel.x);
    s.length = radius * std::numbers::pi / 2.0;
    s.label = label;
    push(s);
    heading_ = left ? left_of(heading_) : right_of(heading_);
  }

  /// Turns in place without moving (used to switch walking direction).
  void set_heading(Vec2 h) { heading_ = h; }

  double length() const { return total_; }

  Vec2 at(double s) const { return locate(s).first->at(locate(s).second); }
  Action label_at(double s) const { return locate(s).first->label; }

private:
  void push(const Segment & s)
  {
    segments_.push_back(s);
    starts_.push_back(total_);
    total_ += s.length;
    cursor_ = s.at(s.length);
  }

  std::pair<const Segment *, double> locate(double s) const
  {
    std::size_t i = 0;
    while (i + 1 < segments_.size() && s >= starts_[i + 1]) ++i;
    return {&segments_[i], s - starts_[i]};
  }

  std::vector<Segment> segments_;
  std::vector<double> starts_;
  double total_ = 0.0;
  Vec2 cursor_;
  Vec2 heading_;
};

/// Constant speed along the path with one optional pause.
struct Timeline
{
  double speed = 0.0;
  double pause_at = -1.0;  // arc length of the pause, < 0 for none
  double pause_s = 0.0;    // pause duration

  double pause_start() const { return pause_at / speed; }
  bool paused(double t) const
  {
    return pause_at >= 0.0 && t >= pause_start() && t < pause_start() + pause_s;
  }
  double distance(double t) const
  {
    if (pause_at < 0.0 || t < pause_start()) return speed * t;
    if (t < pause_start() + pause_s) return pause_at;
    return speed * (t - pause_s);
  }
};

int frame_count(const GenConfig & cfg)
{
  return static_cast<int>(std::lround(cfg.duration_s * kFps));
}

AgentClass vehicle_class(std::mt19937_64 & rng)
{
  static constexpr AgentClass kMix[10] = {AgentClass::kCar, AgentClass::kCar, AgentClass::kCar,
                                          AgentClass::kCar, AgentClass::kCar, AgentClass::kCar,
                                          AgentClass::kVan, AgentClass::kTruck, AgentClass::kBus,
                                          AgentClass::kMotorcyclist};
  return kMix[uniform_index(rng, 10)];
}

std::string numbered(const char * prefix, int i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%02d", prefix, i);
  return buf;
}

AgentTrack make_vehicle(const GenConfig & cfg, std::mt19937_64 & rng, int index)
{
  const IntersectionMap & map = cfg.map;
  const double w = map.lane_width;
  const double box = map.box_half();
  const double duration = (frame_count(cfg) - 1) / static_cast<double>(kFps);

  AgentTrack track;
  track.agent_id = numbered("veh", index);
  track.agent_class = vehicle_class(rng);

  const Vec2 arm = kArmDir[uniform_index(rng, 4)];
  const Vec2 heading = -1.0 * arm;
  const Vec2 right = right_of(heading);

  enum class Manoeuvre { kStraight, kLeft, kRight };
  Manoeuvre man = Manoeuvre::kStraight;
  if (bernoulli(rng, cfg.turn_prob)) man = bernoulli(rng, 0.5) ? Manoeuvre::kLeft : Manoeuvre::kRight;
  int lane = man == Manoeuvre::kLeft ? 0 : man == Manoeuvre::kRight ? 1 : static_cast<int>(uniform_index(rng, 2));
  bool lane_change = bernoulli(rng, cfg.lane_change_prob);
  bool stop = bernoulli(rng, cfg.stop_prob);
  const bool parked = stop && bernoulli(rng, kParkedShare);
  double pause = uniform(rng, 1.0, 3.0);
  const double speed = man == Manoeuvre::kStraight ? uniform(rng, 3.0, 14.0) : uniform(rng, 3.2, 8.0);
  const double u_start = uniform01(rng);
  const double u_lead = uniform01(rng);

  const int n = frame_count(cfg);
  if (parked) {
    const double d0 = box + 3.0 + u_start * (map.arm_length - 3.0);
    const Vec2 p = d0 * arm + (1.5 * w) * right;
    for (int f = 0; f < n; ++f) {
      track.frames.push_back({f, p, VehicleAction::kParked, lane_flags_at(map, p)});
    }
    return track;
  }

  // Distance from the centre where the approach ends (box edge or arc tangent point).
  double approach_end = box;
  double arc_length = 0.0;
  if (man == Manoeuvre::kLeft) {
    approach_end = kLeftTurnRadius - 0.5 * w;
    arc_length = kLeftTurnRadius * std::numbers::pi / 2.0;
  } else if (man == Manoeuvre::kRight) {
    approach_end = kRightTurnRadius + 1.5 * w;
    arc_length = kRightTurnRadius * std::numbers::pi / 2.0;
  }
  const double stop_line = approach_end + 1.0;
  const double change_len = kLaneChangeSeconds * speed;

  // Start distance range; relax optional events until it is feasible.
  double lo = 0.0;
  double hi = 0.0;
  auto bounds = [&]() {
    lo = approach_end + 2.0 + (stop ? 1.0 : 0.0) + (lane_change ? change_len + 1.0 : 0.0);
    hi = box + map.arm_length;
    if (man != Manoeuvre::kStraight) {
      // The arc must be completed before the scenario ends.
      hi = std::min(hi, approach_end + speed * (duration - (stop ? pause : 0.0)) - arc_length - 0.5);
    }
    return lo <= hi;
  };
  if (!bounds()) lane_change = false;
  if (!bounds()) stop = false;
  if (!bounds()) {
    man = Manoeuvre::kStraight;
    approach_end = box;
    bounds();
  }
  const double d0 = lo + u_start * (hi - lo);

  const int start_lane = lane_change ? 1 - lane : lane;
  Path path(d0 * arm + ((start_lane + 0.5) * w) * right, heading);
  double approach = d0 - approach_end;
  if (lane_change) {
    const double lead = u_lead * (approach - change_len - 1.0 - (stop ? 1.0 : 0.0));
    path.line(lead, VehicleAction::kMovingOther);
    path.blend(change_len, ((lane - start_lane) * w) * right, VehicleAction::kLaneChange);
    approach -= lead + change_len;
  }
  path.line(approach, VehicleAction::kMovingOther);
  if (man == Manoeuvre::kLeft) path.quarter_turn(kLeftTurnRadius, true, VehicleAction::kTurnLeft);
  if (man == Manoeuvre::kRight) path.quarter_turn(kRightTurnRadius, false, VehicleAction::kTurnRight);
  path.line(kFarEnough, VehicleAction::kMovingOther);

  Timeline time{speed, stop ? d0 - stop_line : -1.0, pause};
  std::vector<Vec2> pos;
  for (int f = 0; f < n; ++f) pos.push_back(path.at(time.distance(f / static_cast<double>(kFps))));
  for (int f = 0; f < n; ++f) {
    const bool still_prev = f == 0 || pos[f] == pos[f - 1];
    const bool still_next = f + 1 == n || pos[f] == pos[f + 1];
    const bool still = (f > 0 || f + 1 < n) && still_prev && still_next;
    const Action a = still ? Action{VehicleAction::kStopped}
                           : path.label_at(time.distance(f / static_cast<double>(kFps)));
    track.frames.push_back({f, pos[f], a, lane_flags_at(map, pos[f])});
  }
  return track;
}

AgentTrack make_pedestrian(const GenConfig & cfg, std::mt19937_64 & rng, int index)
{
  const IntersectionMap & map = cfg.map;
  const double w = map.lane_width;
  const double kerb = 2.0 * w + 1.5;  // sidewalk offset from the arm centre line
  const double crosswalk = kerb + 1.5;
  const double duration = (frame_count(cfg) - 1) / static_cast<double>(kFps);

  AgentTrack track;
  track.agent_id = numbered("ped", index);
  track.agent_class = AgentClass::kPedestrian;

  const Vec2 arm = kArmDir[uniform_index(rng, 4)];
  const double side = bernoulli(rng, 0.5) ? 1.0 : -1.0;
  const Vec2 normal = side * left_of(arm);
  const bool stands = bernoulli(rng, kPedestrianStandShare);
  const bool crosses = !stands && bernoulli(rng, cfg.cross_prob);
  const double speed = uniform(rng, 0.5, 2.0);
  const double pause = uniform(rng, 1.0, 3.0);
  const double u_start = uniform01(rng);

  const int n = frame_count(cfg);
  if (stands) {
    const Vec2 p = (crosswalk + u_start * 30.0) * arm + kerb * normal;
    for (int f = 0; f < n; ++f) track.frames.push_back({f, p, PedestrianAction::kStopped, {}});
    return track;
  }

  std::vector<std::pair<Vec2, Action>> samples;
  if (crosses) {
    // Walk to the kerb, wait, cross to the opposite sidewalk, walk away from the junction.
    const double d0 = crosswalk + 0.5 + u_start * 0.4 * speed * duration;
    Path path(d0 * arm + kerb * normal, -1.0 * arm);
    path.line(d0 - crosswalk, PedestrianAction::kMoving);
    path.set_heading(-1.0 * normal);
    path.line(2.0 * kerb, PedestrianAction::kCrossing);
    path.set_heading(arm);
    path.line(kFarEnough, PedestrianAction::kMoving);
    Timeline time{speed, d0 - crosswalk, pause};
    for (int f = 0; f < n; ++f) {
      const double t = f / static_cast<double>(kFps);
      const double s = time.distance(t);
      const Action a = time.paused(t) ? Action{PedestrianAction::kWaitingToCross} : path.label_at(s);
      samples.emplace_back(path.at(s), a);
    }
  } else {
    const double d0 = crosswalk + u_start * 30.0;
    Path path(d0 * arm + kerb * normal, arm);
    path.line(kFarEnough, PedestrianAction::kMoving);
    for (int f = 0; f < n; ++f) {
      const double s = speed * f / static_cast<double>(kFps);
      samples.emplace_back(path.at(s), path.label_at(s));
    }
  }
  for (int f = 0; f < n; ++f) track.frames.push_back({f, samples[f].first, samples[f].second, {}});
  return track;
}

}  // namespace

void validate(const GenConfig & cfg)
{
  auto prob = [](double p, const char * name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw UsageError(std::string("gen config: ") + name + " must be in [0, 1], got " + std::to_string(p));
    }
  };
  prob(cfg.turn_prob, "turn_prob");
  prob(cfg.stop_prob, "stop_prob");
  prob(cfg.lane_change_prob, "lane_change_prob");
  prob(cfg.cross_prob, "cross_prob");
  if (!(cfg.duration_s >= 8.0) || !std::isfinite(cfg.duration_s)) {
    throw UsageError("gen config: duration_s must be at least 8, got " + std::to_string(cfg.duration_s));
  }
  if (cfg.n_scenarios < 0 || cfg.n_vehicles < 0 || cfg.n_pedestrians < 0) {
    throw UsageError("gen config: scenario and agent counts must be non-negative");
  }
  if (!(cfg.map.lane_width >= 2.0 && cfg.map.lane_width <= 4.5)) {
    throw UsageError("gen config: lane_width must be in [2, 4.5] m");
  }
  if (!(cfg.map.arm_length >= 30.0) || !std::isfinite(cfg.map.arm_length)) {
    throw UsageError("gen config: arm_length must be at least 30 m");
  }
}

bool inside_box(const IntersectionMap & map, Vec2 p)
{
  return std::abs(p.x) <= map.box_half() && std::abs(p.y) <= map.box_half();
}

LaneFlags lane_flags_at(const IntersectionMap & map, Vec2 p)
{
  if (inside_box(map, p)) return {};
  const double lateral = std::abs(p.x) > std::abs(p.y) ? std::abs(p.y) : std::abs(p.x);
  LaneFlags f;
  if (lateral < map.lane_width) {
    f.left_turn = true;
  } else if (lateral < 2.0 * map.lane_width) {
    f.right_turn = true;
  } else {
    return {};
  }
  f.forward = true;
  f.lane_change = true;
  f.valid = true;
  return f;
}

std::vector<RoadPoint> road_points(const IntersectionMap & map)
{
  std::vector<RoadPoint> out;
  for (const Vec2 arm : kArmDir) {
    const Vec2 inbound_right = right_of(-1.0 * arm);
    out.push_back({map.box_half() * arm + map.lane_width * inbound_right, RoadRole::kEntrance});
    out.push_back({map.box_half() * arm - map.lane_width * inbound_right, RoadRole::kExit});
  }
  return out;
}

Scenario generate_scenario(const GenConfig & cfg, int index)
{
  validate(cfg);
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(seed);
  Scenario s;
  char id[64];
  std::snprintf(id, sizeof(id), "synth_%llu_%04d", static_cast<unsigned long long>(cfg.seed), index);
  s.scenario_id = id;
  s.meta["generator"] = "synthgen";
  s.meta["weather"] = "clear";
  s.road_points = road_points(cfg.map);
  for (int i = 0; i < cfg.n_vehicles; ++i) s.tracks.push_back(make_vehicle(cfg, rng, i));
  for (int i = 0; i < cfg.n_pedestrians; ++i) s.tracks.push_back(make_pedestrian(cfg, rng, i));
  return s;
}

std::vector<Scenario> generate_corpus(const GenConfig & cfg)
{
  validate(cfg);
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(cfg.n_scenarios));
  for (int i = 0; i < cfg.n_scenarios; ++i) out.push_back(generate_scenario(cfg, i));
  return out;
}

}  // namespace jointcast::synth
