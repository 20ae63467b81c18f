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

#ifndef JOINTCAST_REPORT_HPP_
#define JOINTCAST_REPORT_HPP_

#include "jointcast/ad/param_store.hpp"
#include "jointcast/forecaster.hpp"
#include "jointcast/metrics.hpp"
#include "jointcast/scenario.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jointcast::report
{

/// One prediction-dump record: one sample for one window.
///
/// Serialised as JSON Lines with keys scenario_id, agent_id, anchor_t, kind, n, tau, sample,
/// goal [x, y], positions [[x, y] x 25], intents [[p_0 .. p_k] x 25]; numbers at full precision.
struct DumpRecord
{
  std::string scenario_id;
  std::string agent_id;
  int anchor_t = 0;
  AgentKind kind = AgentKind::kVehicle;
  int n_samples = 1;
  double tau = 0.0;
  int sample = 0;
  Vec2 goal;
  std::array<Vec2, kFutFrames> positions{};
  std::array<std::vector<double>, kFutFrames> intents;

  friend bool operator==(const DumpRecord &, const DumpRecord &) = default;
};

std::vector<DumpRecord> to_records(const model::ForecastResult & f);
std::string format_dump(std::span<const DumpRecord> records);
/// Throws SchemaError with the line number for malformed records.
std::vector<DumpRecord> parse_dump(std::string_view text, std::string_view source = "<memory>");

struct EvalOptions
{
  int n_samples = 1;
  double tau = 0.0;
  model::IntentConfig intent;
  std::uint64_t seed = 0;  // scene k draws from derive_seed(seed, k)
};

std::vector<DumpRecord> evaluate(const ad::ParamStore & store, const model::Forecaster & net,
                                 std::span<const SceneSample> scenes, const EvalOptions & opts);

struct SliceRow
{
  metrics::EvalSlice slice = metrics::EvalSlice::kAll;
  long long windows = 0;
  double ade = 0.0;  // sample 0
  double fde = 0.0;
  double min_ade = 0.0;  // over all samples
  double min_fde = 0.0;

  bool present() const { return windows > 0; }
};

struct Report
{
  int n_samples = 0;
  double tau = 0.0;
  std::vector<SliceRow> rows;
  metrics::HorizonAccuracy vehicle_single;
  metrics::HorizonAccuracy vehicle_best;
  metrics::HorizonAccuracy pedestrian_single;
  metrics::HorizonAccuracy pedestrian_best;
  metrics::ConfusionMatrix vehicle_confusion{AgentKind::kVehicle};          // sample 0
  metrics::ConfusionMatrix vehicle_confusion_best{AgentKind::kVehicle};     // min-ADE sample
  metrics::ConfusionMatrix pedestrian_confusion{AgentKind::kPedestrian};
  metrics::ConfusionMatrix pedestrian_confusion_best{AgentKind::kPedestrian};

  /// Throws UsageError if `s` was not requested.
  const SliceRow & row(metrics::EvalSlice s) const;
};

/// Scores every dump window against the corpus windows.
/// Throws SchemaError when a dump record names a window absent from `windows`, or when sample
/// sets are incomplete or disagree with `n_samples` (0 accepts the dump's own N).
Report slice_and_report(std::span<const DumpRecord> dump, std::span<const PredictionWindow> windows,
                        std::span<const metrics::EvalSlice> slices = metrics::kAllSlices, int n_samples = 0);

std::string format_metrics_csv(const Report & r);
std::string format_horizon_csv(const Report & r);
std::string format_confusion_csv(const metrics::ConfusionMatrix & c);
std::string format_summary_json(const Report & r);

/// metrics.csv, horizon_accuracy.csv, confusion_{vehicle,pedestrian}[_best].csv, summary.json.
void write_report(const Report & r, const std::filesystem::path & dir);

struct AblationRow
{
  double fps = 0.0;
  int period = 1;
  std::vector<SliceRow> rows;
};

/// fps,period_frames,slice,windows,ade,fde
std::string format_ablation_csv(std::span<const AblationRow> rows);

}  // namespace jointcast::report

#endif  // JOINTCAST_REPORT_HPP_
