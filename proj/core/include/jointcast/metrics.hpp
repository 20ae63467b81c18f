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

#ifndef JOINTCAST_METRICS_HPP_
#define JOINTCAST_METRICS_HPP_

#include "jointcast/scenario.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace jointcast::metrics
{

struct AdeFde
{
  double ade = 0.0;
  double fde = 0.0;
};

/// Mean and final Euclidean error. Throws NumericError on empty or unequal inputs.
AdeFde ade_fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

/// Minimum ADE and minimum FDE over samples, taken independently.
AdeFde min_ade_fde_n(std::span<const std::vector<Vec2>> preds, std::span<const Vec2> gt);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> v);

enum class AccuracyMode : std::uint8_t { kSingle, kBestSample };

/// Per-frame accuracy of one window: `pred` holds N sample rows of per-frame argmax labels.
/// Single mode scores sample 0; best-sample mode scores a frame if any sample matches.
std::vector<double> intent_accuracy_horizon(std::span<const std::vector<int>> pred, std::span<const int> gt,
                                            AccuracyMode mode);

/// Frame-pooled accuracy-vs-horizon accumulator.
class HorizonAccuracy
{
public:
  explicit HorizonAccuracy(int frames = kFutFrames);
  void add(std::span<const std::vector<int>> pred, std::span<const int> gt, AccuracyMode mode);
  HorizonAccuracy & operator+=(const HorizonAccuracy & o);
  std::vector<double> accuracy() const;  // 0 where nothing was counted
  const std::vector<long long> & correct() const { return correct_; }
  const std::vector<long long> & total() const { return total_; }

private:
  std::vector<long long> correct_;
  std::vector<long long> total_;
};

/// counts[gt][pred] over the intent classes of one agent kind.
class ConfusionMatrix
{
public:
  explicit ConfusionMatrix(AgentKind kind = AgentKind::kVehicle);
  AgentKind kind() const { return kind_; }
  int classes() const { return classes_; }
  /// Throws NumericError for labels outside [0, classes).
  void add(int gt, int pred);
  long long at(int gt, int pred) const;
  long long row_sum(int gt) const;
  long long total() const;
  ConfusionMatrix & operator+=(const ConfusionMatrix & o);
  friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;

private:
  AgentKind kind_;
  int classes_;
  std::vector<long long> counts_;
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, AgentKind kind);

enum class EvalSlice : std::uint8_t { kPedestrians, kVehiclesMoving, kLaneChange, kTurn, kAll };
inline constexpr std::array<EvalSlice, 5> kAllSlices = {EvalSlice::kPedestrians, EvalSlice::kVehiclesMoving,
                                                        EvalSlice::kLaneChange, EvalSlice::kTurn, EvalSlice::kAll};
inline constexpr double kMovingThreshold = 1.0;  // metres of future path

std::string_view slice_name(EvalSlice s);
EvalSlice parse_slice(std::string_view name);

/// Sum of frame-to-frame distances from the origin through the 25 future positions.
double future_path_length(const PredictionWindow & w);
bool in_slice(const PredictionWindow & w, EvalSlice s);

}  // namespace jointcast::metrics

#endif  // JOINTCAST_METRICS_HPP_
