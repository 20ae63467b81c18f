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

#include "jointcast/ad/tape.hpp"
#include "jointcast/forecaster.hpp"
#include "jointcast/random.hpp"
#include "jointcast/synthgen.hpp"
#include "jointcast/training.hpp"

#include <benchmark/benchmark.h>

namespace
{

using namespace jointcast;

// The busiest scene of a small four-agent corpus.
model::SceneTensors busy_scene()
{
  synth::GenConfig g;
  g.seed = 5;
  g.n_scenarios = 1;
  g.n_vehicles = 3;
  g.n_pedestrians = 1;
  const auto scenes = build_scenes(synth::generate_corpus(g).front());
  std::size_t best = 0;
  for (std::size_t i = 1; i < scenes.size(); ++i) {
    if (scenes[i].windows.size() > scenes[best].windows.size()) best = i;
  }
  return model::prepare_scene(scenes[best]);
}

void BM_Forecast(benchmark::State & state)
{
  const int n = static_cast<int>(state.range(0));
  const model::SceneTensors scene = busy_scene();
  ad::ParamStore store;
  const auto net = model::Forecaster::create(store, 1);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    auto f = model::forecast(store, net, scene, n, model::tau_for_samples(n), {}, rng);
    benchmark::DoNotOptimize(f.agents.data());
  }
  state.counters["agents"] = scene.agent_count();
}
BENCHMARK(BM_Forecast)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_TrainStepForwardBackward(benchmark::State & state)
{
  const model::SceneTensors scene = busy_scene();
  ad::ParamStore store;
  const auto net = model::Forecaster::create(store, 1);
  const train::ClassWeights weights = train::corpus_class_weights(std::span(&scene, 1));
  const model::SceneTensors * batch[] = {&scene};
  const train::LossNorms norms = train::loss_norms(batch, weights);
  const train::TrainConfig cfg;
  std::mt19937_64 rng(3);
  ad::Matrix eta(scene.agent_count(), model::kLatent);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = standard_normal(rng);
  ad::GradBuffer grads(store);
  for (auto _ : state) {
    ad::Tape tape(&store);
    const auto loss = train::scene_forward(tape, net, scene, eta, weights, cfg, norms);
    tape.backward(loss.objective);
    tape.accumulate_param_grads(grads);
  }
  state.counters["agents"] = scene.agent_count();
}
BENCHMARK(BM_TrainStepForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
