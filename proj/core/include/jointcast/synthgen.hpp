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

#ifndef JOINTCAST_SYNTHGEN_HPP_
#define JOINTCAST_SYNTHGEN_HPP_

#include "jointcast/scenario.hpp"

#include <cstdint>
#include <vector>

namespace jointcast::synth
{

/// Four-way intersection centred at the origin, two lanes per direction, right-hand traffic.
/// Arms run along the +x, +y, -x, -y axes from the box edge (2 lane widths) outwards.
struct IntersectionMap
{
  double lane_width = 3.5;
  double arm_length = 60.0;

  double box_half() const { return 2.0 * lane_width; }
};

struct GenConfig
{
  std::uint64_t seed = 0;
  int n_scenarios = 10;
  double duration_s = 12.6;
  int n_vehicles = 6;
  int n_pedestrians = 3;
  double turn_prob = 0.15;
  double stop_prob = 0.2;
  double lane_change_prob = 0.1;
  /// Share of moving pedestrians that follow the crossing script.
  double cross_prob = 0.6;
  IntersectionMap map;
};

/// Throws UsageError for out-of-range fields.
void validate(const GenConfig & cfg);

inline constexpr double kLeftTurnRadius = 10.0;
inline constexpr double kRightTurnRadius = 6.0;
inline constexpr double kLaneChangeSeconds = 3.0;
inline constexpr double kParkedShare = 0.25;  // share of stopping vehicles that are parked throughout

/// Deterministic in cfg; scenario i draws from derive_seed(cfg.seed, i).
std::vector<Scenario> generate_corpus(const GenConfig & cfg);
Scenario generate_scenario(const GenConfig & cfg, int index);

/// Road entrance and exit points at the four arm boundaries.
std::vector<RoadPoint> road_points(const IntersectionMap & map);

/// Lane flags implied by a BEV position: invalid inside the box and off the carriageway.
LaneFlags lane_flags_at(const IntersectionMap & map, Vec2 p);

bool inside_box(const IntersectionMap & map, Vec2 p);

}  // namespace jointcast::synth

#endif  // JOINTCAST_SYNTHGEN_HPP_
