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

#include "jointcast/ad/param_store.hpp"
#include "jointcast/scene_graph.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace
{

using namespace jointcast;

struct Scene
{
  std::vector<Vec2> pos, vel;
  std::vector<RoadPoint> roads;
};

// n agents spread over a square sized so each sees a handful of neighbours.
Scene crowd(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  const double half = 10.0 * std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> u(-half, half), v(-3.0, 3.0);
  Scene s;
  for (int i = 0; i < n; ++i) {
    s.pos.push_back({u(rng), u(rng)});
    s.vel.push_back({v(rng), v(rng)});
  }
  for (int r = 0; r < 8; ++r) s.roads.push_back({{u(rng), u(rng)}, r % 2 ? RoadRole::kExit : RoadRole::kEntrance});
  return s;
}

void BM_BuildSceneGraph(benchmark::State & state)
{
  const Scene s = crowd(static_cast<int>(state.range(0)), 1);
  const ad::Matrix hidden = ad::Matrix::Zero(state.range(0), graph::kHiddenWidth);
  std::size_t edges = 0;
  for (auto _ : state) {
    const auto g = graph::build_scene_graph(s.pos, s.vel, hidden, s.roads);
    edges = g.edges.size();
    benchmark::DoNotOptimize(edges);
  }
  state.counters["edges"] = static_cast<double>(edges);
}
BENCHMARK(BM_BuildSceneGraph)->RangeMultiplier(2)->Range(4, 64);

void BM_MessagePass(benchmark::State & state)
{
  const int n = static_cast<int>(state.range(0));
  const Scene s = crowd(n, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  ad::Matrix hidden(n, graph::kHiddenWidth);
  for (Eigen::Index i = 0; i < hidden.size(); ++i) hidden.data()[i] = nd(rng);
  ad::ParamStore store;
  const auto mp = graph::MessagePassing::create(store, rng);
  const auto g = graph::build_scene_graph(s.pos, s.vel, hidden, s.roads);
  for (auto _ : state) {
    ad::Matrix out = graph::message_pass(g, store, mp);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["edges"] = static_cast<double>(g.edges.size());
}
BENCHMARK(BM_MessagePass)->RangeMultiplier(2)->Range(4, 64);

}  // namespace
