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

#include "jointcast/error.hpp"
#include "jointcast/forecaster.hpp"

#include <algorithm>
#include <string>

namespace jointcast::metrics
{

AdeFde ade_fde(std::span<const Vec2> pred, std::span<const Vec2> gt)
{
  if (pred.empty() || pred.size() != gt.size()) {
    throw NumericError("ade_fde: prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                       std::to_string(gt.size()));
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) sum += (pred[m] - gt[m]).norm();
  return {sum / static_cast<double>(pred.size()), (pred.back() - gt.back()).norm()};
}

AdeFde min_ade_fde_n(std::span<const std::vector<Vec2>> preds, std::span<const Vec2> gt)
{
  if (preds.empty()) throw NumericError("min_ade_fde_n: empty sample set");
  AdeFde best = ade_fde(preds[0], gt);
  for (std::size_t s = 1; s < preds.size(); ++s) {
    const AdeFde e = ade_fde(preds[s], gt);
    best.ade = std::min(best.ade, e.ade);
    best.fde = std::min(best.fde, e.fde);
  }
  return best;
}

int argmax(std::span<const double> v)
{
  if (v.empty()) throw NumericError("argmax: empty vector");
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<double> intent_accuracy_horizon(std::span<const std::vector<int>> pred, std::span<const int> gt,
                                            AccuracyMode mode)
{
  HorizonAccuracy acc(static_cast<int>(gt.size()));
  acc.add(pred, gt, mode);
  return acc.accuracy();
}

HorizonAccuracy::HorizonAccuracy(int frames)
: correct_(static_cast<std::size_t>(frames), 0), total_(static_cast<std::size_t>(frames), 0)
{
}

void HorizonAccuracy::add(std::span<const std::vector<int>> pred, std::span<const int> gt, AccuracyMode mode)
{
  if (pred.empty()) throw NumericError("intent accuracy: no samples");
  if (gt.size() != total_.size()) throw NumericError("intent accuracy: horizon length mismatch");
  const std::size_t samples = mode == AccuracyMode::kSingle ? 1 : pred.size();
  for (std::size_t m = 0; m < gt.size(); ++m) {
    bool hit = false;
    for (std::size_t s = 0; s < samples && !hit; ++s) {
      if (pred[s].size() != gt.size()) throw NumericError("intent accuracy: horizon length mismatch");
      hit = pred[s][m] == gt[m];
    }
    correct_[m] += hit ? 1 : 0;
    total_[m] += 1;
  }
}

HorizonAccuracy & HorizonAccuracy::operator+=(const HorizonAccuracy & o)
{
  if (o.total_.size() != total_.size()) throw NumericError("intent accuracy: horizon length mismatch");
  for (std::size_t m = 0; m < total_.size(); ++m) {
    correct_[m] += o.correct_[m];
    total_[m] += o.total_[m];
  }
  return *this;
}

std::vector<double> HorizonAccuracy::accuracy() const
{
  std::vector<double> out(total_.size(), 0.0);
  for (std::size_t m = 0; m < total_.size(); ++m) {
    if (total_[m] > 0) out[m] = static_cast<double>(correct_[m]) / static_cast<double>(total_[m]);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(AgentKind kind)
: kind_(kind),
  classes_(intent_class_count(kind)),
  counts_(static_cast<std::size_t>(classes_ * classes_), 0)
{
}

void ConfusionMatrix::add(int gt, int pred)
{
  if (gt < 0 || gt >= classes_ || pred < 0 || pred >= classes_) {
    throw NumericError("confusion: label out of range for " + std::string(kind_name(kind_)) + " (gt " +
                       std::to_string(gt) + ", pred " + std::to_string(pred) + ")");
  }
  counts_[static_cast<std::size_t>(gt * classes_ + pred)] += 1;
}

long long ConfusionMatrix::at(int gt, int pred) const
{
  return counts_[static_cast<std::size_t>(gt * classes_ + pred)];
}

long long ConfusionMatrix::row_sum(int gt) const
{
  long long s = 0;
  for (int p = 0; p < classes_; ++p) s += at(gt, p);
  return s;
}

long long ConfusionMatrix::total() const
{
  long long s = 0;
  for (long long c : counts_) s += c;
  return s;
}

ConfusionMatrix & ConfusionMatrix::operator+=(const ConfusionMatrix & o)
{
  if (o.kind_ != kind_) throw NumericError("confusion: cannot merge matrices of different agent kinds");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, AgentKind kind)
{
  if (pred.size() != gt.size()) throw NumericError("confusion: prediction and ground truth differ in length");
  ConfusionMatrix c(kind);
  for (std::size_t i = 0; i < gt.size(); ++i) c.add(gt[i], pred[i]);
  return c;
}

std::string_view slice_name(EvalSlice s)
{
  switch (s) {
    case EvalSlice::kPedestrians:
      return "Pedestrians";
    case EvalSlice::kVehiclesMoving:
      return "VehiclesMoving";
    case EvalSlice::kLaneChange:
      return "LaneChange";
    case EvalSlice::kTurn:
      return "Turn";
    case EvalSlice::kAll:
      return "All";
  }
  return "?";
}

EvalSlice parse_slice(std::string_view name)
{
  for (EvalSlice s : kAllSlices) {
    if (slice_name(s) == name) return s;
  }
  throw UsageError("unknown evaluation slice '" + std::string(name) + "'");
}

double future_path_length(const PredictionWindow & w)
{
  double len = 0.0;
  Vec2 prev = w.origin;
  for (const auto & f : w.fut) {
    len += (f.position - prev).norm();
    prev = f.position;
  }
  return len;
}

bool in_slice(const PredictionWindow & w, EvalSlice s)
{
  switch (s) {
    case EvalSlice::kPedestrians:
      return w.kind == AgentKind::kPedestrian;
    case EvalSlice::kVehiclesMoving:
      return w.kind == AgentKind::kVehicle && future_path_length(w) >= kMovingThreshold;
    case EvalSlice::kLaneChange:
      return (model::future_flags(w) & model::kFutureLaneChange) != 0;
    case EvalSlice::kTurn:
      return (model::future_flags(w) & model::kFutureTurn) != 0;
    case EvalSlice::kAll:
      return true;
  }
  return false;
}

}  // namespace jointcast::metrics
