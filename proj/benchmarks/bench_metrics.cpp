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

#include "jointcast/metrics.hpp"
#include "jointcast/report.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace
{

using namespace jointcast;

void BM_MinAdeFde(benchmark::State & state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 5.0);
  std::vector<Vec2> gt(kFutFrames);
  for (auto & p : gt) p = {nd(rng), nd(rng)};
  std::vector<std::vector<Vec2>> preds(n, gt);
  for (auto & s : preds)
    for (auto & p : s) p = p + Vec2{nd(rng), nd(rng)};
  for (auto _ : state) {
    auto e = metrics::min_ade_fde_n(preds, gt);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_MinAdeFde)->Arg(1)->Arg(20);

// slice_and_report over W windows of N = 20 samples.
void BM_SliceAndReport(benchmark::State & state)
{
  const int windows = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::vector<PredictionWindow> corpus;
  std::vector<report::DumpRecord> dump;
  for (int w = 0; w < windows; ++w) {
    PredictionWindow pw;
    pw.scenario_id = "s";
    pw.agent_id = "a" + std::to_string(w);
    pw.anchor_t = 14;
    for (int m = 0; m < kFutFrames; ++m) {
      pw.fut[m].position = {1.0 * m, 0.1 * w};
      pw.fut_intent[m] = VehicleAction::kMovingOther;
    }
    for (int s = 0; s < 20; ++s) {
      report::DumpRecord r;
      r.scenario_id = pw.scenario_id;
      r.agent_id = pw.agent_id;
      r.anchor_t = pw.anchor_t;
      r.n_samples = 20;
      r.sample = s;
      for (int m = 0; m < kFutFrames; ++m) {
        r.positions[m] = pw.fut[m].position + Vec2{nd(rng), nd(rng)};
        r.intents[m].assign(kVehicleActionCount, 0.125);
      }
      dump.push_back(std::move(r));
    }
    corpus.push_back(std::move(pw));
  }
  for (auto _ : state) {
    auto rep = report::slice_and_report(dump, corpus);
    benchmark::DoNotOptimize(rep.rows.data());
  }
  state.SetItemsProcessed(state.iterations() * windows);
}
BENCHMARK(BM_SliceAndReport)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
