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

#ifndef JOINTCAST_TRAINING_HPP_
#define JOINTCAST_TRAINING_HPP_

#include "jointcast/ad/param_store.hpp"
#include "jointcast/ad/tape.hpp"
#include "jointcast/forecaster.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jointcast::train
{

struct TrainConfig
{
  double lambda1 = 1.0;
  double lambda2 = 100.0;
  double lambda3 = 200.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double lr = 1e-4;
  int batch = 32;  // scenes per optimizer step
  int max_steps = 1000;
  std::uint64_t seed = 0;
  int augment = 5;  // replication of rare-class scenes in the sampler
  double clip_norm = 10.0;
  model::ModelConfig model;
};

/// Throws UsageError when weights are negative, batch < 1, etc.
void validate(const TrainConfig & cfg);

/// w_c = total / count_c for count_c > 0, else 0. Throws NumericError when every count is zero.
std::vector<double> class_weights(std::span<const double> counts);

struct ClassWeights
{
  std::vector<double> vehicle;     // kVehicleActionCount entries, 0 outside the intent classes
  std::vector<double> pedestrian;  // kPedestrianActionCount entries

  const std::vector<double> & of(AgentKind k) const { return k == AgentKind::kVehicle ? vehicle : pedestrian; }
};

/// Inverse-frequency weights from the future intention labels of every agent in `scenes`.
/// A kind with no labelled frames gets all-zero weights.
ClassWeights corpus_class_weights(std::span<const model::SceneTensors> scenes);

struct LossBreakdown
{
  double kl = 0.0;
  double reconstruction = 0.0;
  double l_gpn = 0.0;
  double l_int = 0.0;
  double l_traj = 0.0;
  double l_final = 0.0;
  std::array<double, kVehicleActionCount> vehicle_class{};        // weighted CE per GT class
  std::array<double, kPedestrianActionCount> pedestrian_class{};

  LossBreakdown & operator+=(const LossBreakdown & o);
};

/// Batch-wide normalisers so per-scene objectives sum to the batch loss.
struct LossNorms
{
  double agents = 0.0;         // goal terms are averaged over agents
  double intent_frames = 0.0;  // agent-frames whose GT class carries a non-zero weight
  double traj_frames = 0.0;    // agent-frames
};

LossNorms loss_norms(std::span<const model::SceneTensors * const> batch, const ClassWeights & weights);

struct SceneLoss
{
  ad::Var objective;  // 1 x 1, this scene's share of l_final
  LossBreakdown breakdown;
};

/// l_gpn = a1 * KL + a2 * |goal_hat - G|^2 (mean over agents),
/// l_int = weighted CE mean over weighted agent-frames, l_traj = mean L2 velocity error,
/// l_final = l1 * l_gpn + l2 * l_int + l3 * l_traj.
SceneLoss compute_losses(ad::Tape & tape, const model::SceneTensors & scene, const model::GoalPosterior & post,
                         const model::Rollout & roll, const ClassWeights & weights, const TrainConfig & cfg,
                         const LossNorms & norms);

/// Teacher-forced forward pass of one scene plus its losses.
SceneLoss scene_forward(ad::Tape & tape, const model::Forecaster & model, const model::SceneTensors & scene,
                        const ad::Matrix & eta, const ClassWeights & weights, const TrainConfig & cfg,
                        const LossNorms & norms);

/// True when any agent's future carries a lane-change or turn label.
bool is_rare(const model::SceneTensors & scene);

/// Seeded shuffling sampler over scene indices; rare scenes appear `augment` times per epoch.
class SceneSampler
{
public:
  SceneSampler(std::span<const model::SceneTensors> scenes, int augment, std::uint64_t seed);
  std::vector<std::size_t> next_batch(int size);
  std::size_t pool_size() const { return pool_.size(); }

private:
  void reshuffle();
  std::vector<std::size_t> pool_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

struct TrainHooks
{
  std::function<void(int step, const LossBreakdown &)> on_step;
  /// When set, the last good parameters are written here before a numeric failure is rethrown.
  std::filesystem::path failure_checkpoint;
};

struct TrainResult
{
  ad::ParamStore store;
  ClassWeights weights;
  std::vector<LossBreakdown> log;  // one entry per optimizer step, measured before the update
};

/// Seeds: model init derive_seed(seed, 1), sampler derive_seed(seed, 2), posterior noise derive_seed(seed, 3).
TrainResult train(std::span<const model::SceneTensors> scenes, const TrainConfig & cfg, const TrainHooks & hooks = {});

/// CSV header plus one row per step: step,l_gpn,l_int,l_traj,l_final with 6 decimals.
std::string format_loss_log(std::span<const LossBreakdown> log);

/// Checkpoint metadata (JSON text) describing the model configuration.
std::string checkpoint_metadata(const TrainConfig & cfg);
model::ModelConfig model_config_from_metadata(const std::string & metadata);

}  // namespace jointcast::train

#endif  // JOINTCAST_TRAINING_HPP_
