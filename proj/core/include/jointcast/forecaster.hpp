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

#ifndef JOINTCAST_FORECASTER_HPP_
#define JOINTCAST_FORECASTER_HPP_

#include "jointcast/ad/layers.hpp"
#include "jointcast/ad/tape.hpp"
#include "jointcast/scenario.hpp"
#include "jointcast/scene_graph.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jointcast::model
{

inline constexpr int kObsHidden = 64;
inline constexpr int kGoalEmbed = 16;
inline constexpr int kLatent = 16;
inline constexpr int kDecoderHidden = graph::kHiddenWidth;
inline constexpr int kTrajectoryInput = kDecoderHidden + kVehicleActionCount + kPedestrianActionCount;

/// Truncation scale used for single-shot and 20-sample evaluation.
inline constexpr double kSingleShotTau = 0.0;
inline constexpr double kMultiShotTau = 1.1;
double tau_for_samples(int n);

enum class IntentMode : std::uint8_t { kPredicted, kOracle };

struct IntentConfig
{
  IntentMode mode = IntentMode::kPredicted;
  int refresh_period = 1;  // oracle: frames between ground-truth refreshes
};

/// Supported oracle refresh rates (FPS) and their periods in frames at 5 Hz.
inline constexpr std::array<double, 5> kOracleFps = {5.0, 2.5, 1.67, 1.0, 0.5};
/// Throws UsageError for rates outside kOracleFps.
int refresh_period_for_fps(double fps);

struct ModelConfig
{
  graph::AttentionScale scale = graph::AttentionScale::kDimension;
};

/// Everything the model needs about one scene (all windows sharing an anchor frame).
/// Positions handed to the network are relative to `reference` (the first agent's origin).
struct SceneTensors
{
  std::string scenario_id;
  int anchor_t = 0;
  Vec2 reference;
  std::vector<std::string> agent_ids;
  std::vector<AgentKind> kinds;
  std::vector<int> vehicle_rows;
  std::vector<int> pedestrian_rows;
  std::vector<ObservationMatrix> observations;
  std::vector<Vec2> origins;           // scenario frame
  std::vector<Vec2> start_positions;   // scene-local
  std::vector<Vec2> start_velocities;  // metres per frame
  std::vector<RoadPoint> roads;        // scene-local
  std::vector<Vec2> gt_goals;          // agent-centric endpoint
  std::vector<std::array<Vec2, kFutFrames>> gt_positions;   // scenario frame
  std::vector<std::array<Vec2, kFutFrames>> gt_velocities;  // metres per frame
  std::vector<std::array<int, kFutFrames>> gt_intents;      // action index of the agent's kind
  std::vector<std::uint8_t> future_flags;  // kFutureLaneChange | kFutureTurn from future actions and intents

  int agent_count() const { return static_cast<int>(kinds.size()); }
};

inline constexpr std::uint8_t kFutureLaneChange = 1;
inline constexpr std::uint8_t kFutureTurn = 2;

/// Lane-change / turn membership of a window's future (actions or intentions).
std::uint8_t future_flags(const PredictionWindow & w);

SceneTensors prepare_scene(const SceneSample & scene);

struct GoalPosterior
{
  ad::Var embedding;  // n x 16
  ad::Var mu;         // n x 16
  ad::Var log_sigma;  // n x 16
  ad::Var z;          // n x 16
  ad::Var goal_hat;   // n x 2
};

struct Rollout
{
  std::vector<ad::Var> velocity;           // per step, n x 2
  std::vector<ad::Var> position;           // per step, n x 2, scene-local
  std::vector<ad::Var> vehicle_logits;     // per step, |vehicle_rows| x 8; invalid when absent or oracle
  std::vector<ad::Var> pedestrian_logits;  // per step, |pedestrian_rows| x 5
  std::vector<ad::Matrix> vehicle_intent;     // per step, n x 8 trajectory-head intent input
  std::vector<ad::Matrix> pedestrian_intent;  // per step, n x 5
};

std::vector<bool> intent_mask(AgentKind kind);

class Forecaster
{
public:
  Forecaster() = default;
  static Forecaster create(ad::ParamStore & store, std::uint64_t seed, const ModelConfig & cfg = {});
  static Forecaster bind(const ad::ParamStore & store, const ModelConfig & cfg = {});

  /// n x 64: final GRU state after the 15 observed frames, zero initial state.
  ad::Var encode_observation(ad::Tape & tape, std::span<const ObservationMatrix> obs) const;
  ad::Var embed_goal(ad::Tape & tape, const ad::Var & goals) const;
  /// `eta` is n x 16 standard-normal noise; eta = 0 gives z = mu.
  GoalPosterior goal_posterior(ad::Tape & tape, const ad::Var & obs_enc, const ad::Var & gt_goal,
                               const ad::Matrix & eta) const;
  ad::Var decode_goal(ad::Tape & tape, const ad::Var & obs_enc, const ad::Var & z) const;
  /// z ~ N(0, tau^2 I) per agent; tau = 0 skips the draw and decodes z = 0.
  ad::Var goal_sample(ad::Tape & tape, const ad::Var & obs_enc, double tau, std::mt19937_64 & rng) const;

  /// Unrolls kFutFrames decoding steps over the scene graph. `goals` are agent-centric (n x 2).
  /// Throws NumericError naming the step when a velocity becomes non-finite.
  Rollout rollout(ad::Tape & tape, const SceneTensors & scene, const ad::Var & obs_enc, const ad::Var & goals,
                  const IntentConfig & intent = {}) const;

  const graph::MessagePassing & message_passing() const { return mp_; }
  graph::MessagePassing & message_passing() { return mp_; }

private:
  ad::GruCell encoder_past_;
  ad::Mlp encoder_destination_;
  ad::Mlp encoder_latent_;
  ad::Mlp decoder_latent_;
  ad::GruCell rnn_future_;
  ad::Mlp vehicle_intent_;
  ad::Mlp pedestrian_intent_;
  ad::Mlp trajectory_;
  graph::MessagePassing mp_;
};

struct SampleForecast
{
  Vec2 goal;  // scenario frame
  std::array<Vec2, kFutFrames> positions;   // scenario frame
  std::array<Vec2, kFutFrames> velocities;  // metres per frame
  /// Per future frame, a distribution over the agent kind's full action set (masked entries are 0).
  std::array<std::vector<double>, kFutFrames> intents;
};

struct AgentForecast
{
  std::string agent_id;
  AgentKind kind = AgentKind::kVehicle;
  std::vector<SampleForecast> samples;
};

struct ForecastResult
{
  std::string scenario_id;
  int anchor_t = 0;
  int n_samples = 0;
  double tau = 0.0;
  std::vector<AgentForecast> agents;
};

/// Inference: n_samples goal draws at scale tau, one rollout each. Deterministic in rng state.
ForecastResult forecast(const ad::ParamStore & store, const Forecaster & model, const SceneTensors & scene,
                        int n_samples, double tau, const IntentConfig & intent, std::mt19937_64 & rng);

}  // namespace jointcast::model

#endif  // JOINTCAST_FORECASTER_HPP_
