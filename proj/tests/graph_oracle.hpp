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

#ifndef JOINTCAST_TESTS_GRAPH_ORACLE_HPP_
#define JOINTCAST_TESTS_GRAPH_ORACLE_HPP_

#include "jointcast/random.hpp"
#include "jointcast/scene_graph.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace jointcast::testing
{

struct RandomScene
{
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<RoadPoint> roads;
};

/// Agents scattered over a 100 m square; some coordinates snapped to a 5 m grid so exact
/// 20 m / 35 m distances occur.
inline RandomScene random_scene(std::mt19937_64 & rng)
{
  RandomScene s;
  const int n = 1 + static_cast<int>(uniform_index(rng, 12));
  const int r = static_cast<int>(uniform_index(rng, 9));
  auto coord = [&] {
    const double c = uniform(rng, -50.0, 50.0);
    return bernoulli(rng, 0.3) ? 5.0 * std::round(c / 5.0) : c;
  };
  for (int i = 0; i < n; ++i) {
    s.positions.push_back({coord(), coord()});
    s.velocities.push_back({uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)});
  }
  for (int i = 0; i < r; ++i) {
    s.roads.push_back({{coord(), coord()}, bernoulli(rng, 0.5) ? RoadRole::kEntrance : RoadRole::kExit});
  }
  return s;
}

/// (src, dst) pairs by an independent all-pairs check with squared distances.
inline std::set<std::pair<int, int>> brute_force_edges(const RandomScene & s)
{
  std::set<std::pair<int, int>> out;
  const int n = static_cast<int>(s.positions.size());
  auto d2 = [](Vec2 a, Vec2 b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && d2(s.positions[i], s.positions[j]) <= 20.0 * 20.0) out.insert({j, i});
    }
    for (std::size_t k = 0; k < s.roads.size(); ++k) {
      if (d2(s.roads[k].position, s.positions[i]) <= 35.0 * 35.0) out.insert({n + static_cast<int>(k), i});
    }
  }
  return out;
}

inline std::set<std::pair<int, int>> edge_set(const graph::SceneGraph & g)
{
  std::set<std::pair<int, int>> out;
  for (const auto & e : g.edges) out.insert({e.src, e.dst});
  return out;
}

}  // namespace jointcast::testing

#endif  // JOINTCAST_TESTS_GRAPH_ORACLE_HPP_
