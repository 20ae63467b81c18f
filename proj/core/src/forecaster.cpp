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

#include "jointcast/forecaster.hpp"

#include "jointcast/error.hpp"
#include "jointcast/random.hpp"

#include <cmath>
#include <string>

namespace jointcast::model
{

using ad::Activation;
using ad::Matrix;
using ad::Var;

namespace
{

const std::vector<ad::LayerSpec> kDestinationLayers = {
  {2, 8, Activation::kRelu}, {8, 16, Activation::kRelu}, {16, kGoalEmbed, Activation::kNone}};
const std::vector<ad::LayerSpec> kLatentLayers = {
  {kObsHidden + kGoalEmbed, 8, Activation::kRelu}, {8, 50, Activation::kRelu}, {50, 2 * kLatent, Activation::kNone}};
const std::vector<ad::LayerSpec> kGoalDecoderLayers = {{kObsHidden + kLatent, 1024, Activation::kRelu},
                                                       {1024, 512, Activation::kRelu},
                                                       {512, 1024, Activation::kRelu},
                                                       {1024, 2, Activation::kNone}};
const std::vector<ad::LayerSpec> kVehicleIntentLayers = {{kDecoderHidden, 256, Activation::kRelu},
                                                         {256, 128, Activation::kRelu},
                                                         {128, kVehicleActionCount, Activation::kNone}};
const std::vector<ad::LayerSpec> kPedestrianIntentLayers = {{kDecoderHidden, 256, Activation::kRelu},
                                                            {256, 128, Activation::kRelu},
                                                            {128, kPedestrianActionCount, Activation::kNone}};
const std::vector<ad::LayerSpec> kTrajectoryLayers = {
  {kTrajectoryInput, 80, Activation::kRelu}, {80, 40, Activation::kRelu}, {40, 2, Activation::kNone}};

Matrix vec2_rows(std::span<const Vec2> v)
{
  Matrix m(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = v[i].x;
    m(static_cast<Eigen::Index>(i), 1) = v[i].y;
  }
  return m;
}

std::vector<Vec2> rows_vec2(const Matrix & m)
{
  std::vector<Vec2> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1)};
  return out;
}

}  // namespace

double tau_for_samples(int n)
{
  if (n < 1) throw UsageError("number of samples must be at least 1");
  return n == 1 ? kSingleShotTau : kMultiShotTau;
}

int refresh_period_for_fps(double fps)
{
  for (double f : kOracleFps) {
    if (std::abs(f - fps) < 1e-3) return static_cast<int>(std::lround(kFps / f));
  }
  throw UsageError("oracle frequency must be one of 5, 2.5, 1.67, 1, 0.5 FPS, got " + std::to_string(fps));
}

std::vector<bool> intent_mask(AgentKind kind)
{
  std::vector<bool> mask(static_cast<std::size_t>(action_count(kind)), false);
  for (int c = 0; c < intent_class_count(kind); ++c) mask[static_cast<std::size_t>(c)] = true;
  return mask;
}

std::uint8_t future_flags(const PredictionWindow & w)
{
  std::uint8_t flags = 0;
  auto mark = [&flags](const Action & a) {
    if (const auto * v = std::get_if<VehicleAction>(&a)) {
      if (*v == VehicleAction::kLaneChange) flags |= kFutureLaneChange;
      if (*v == VehicleAction::kTurnLeft || *v == VehicleAction::kTurnRight) flags |= kFutureTurn;
    }
  };
  for (const auto & f : w.fut) mark(f.action);
  for (const auto & a : w.fut_intent) mark(a);
  return flags;
}

SceneTensors prepare_scene(const SceneSample & scene)
{
  if (scene.windows.empty()) throw NumericError("prepare_scene: scene has no windows");
  SceneTensors t;
  t.scenario_id = scene.scenario_id;
  t.anchor_t = scene.anchor_t;
  t.reference = scene.windows.front().origin;
  for (const auto & r : scene.road_points) t.roads.push_back({r.position - t.reference, r.role});
  for (const auto & w : scene.windows) {
    const int row = static_cast<int>(t.kinds.size());
    t.agent_ids.push_back(w.agent_id);
    t.kinds.push_back(w.kind);
    (w.kind == AgentKind::kVehicle ? t.vehicle_rows : t.pedestrian_rows).push_back(row);
    t.observations.push_back(encode_frame_features(w));
    t.origins.push_back(w.origin);
    t.start_positions.push_back(w.origin - t.reference);
    t.start_velocities.push_back(w.obs[kObsFrames - 1].position - w.obs[kObsFrames - 2].position);
    t.gt_goals.push_back(w.fut[kFutFrames - 1].position - w.origin);
    std::array<Vec2, kFutFrames> pos{};
    std::array<Vec2, kFutFrames> vel{};
    std::array<int, kFutFrames> intent{};
    Vec2 prev = w.origin;
    for (int m = 0; m < kFutFrames; ++m) {
      pos[m] = w.fut[m].position;
      vel[m] = pos[m] - prev;
      prev = pos[m];
      intent[m] = action_index(w.fut_intent[m]);
    }
    t.gt_positions.push_back(pos);
    t.gt_velocities.push_back(vel);
    t.gt_intents.push_back(intent);
    t.future_flags.push_back(future_flags(w));
  }
  return t;
}

Forecaster Forecaster::create(ad::ParamStore & store, std::uint64_t seed, const ModelConfig & cfg)
{
  std::mt19937_64 rng(seed);
  Forecaster f;
  f.encoder_past_ = ad::GruCell::create(store, "encoder_past.gru", kFeatureWidth, kObsHidden, rng);
  f.encoder_destination_ = ad::Mlp::create(store, "encoder_destination", kDestinationLayers, rng);
  f.encoder_latent_ = ad::Mlp::create(store, "encoder_latent", kLatentLayers, rng);
  f.decoder_latent_ = ad::Mlp::create(store, "decoder_latent", kGoalDecoderLayers, rng);
  f.rnn_future_ = ad::GruCell::create(store, "rnn_future.gru", kDecoderHidden, kDecoderHidden, rng);
  f.mp_ = graph::MessagePassing::create(store, rng, cfg.scale);
  f.vehicle_intent_ = ad::Mlp::create(store, "vehicle_intention_predictor", kVehicleIntentLayers, rng);
  f.pedestrian_intent_ = ad::Mlp::create(store, "pedestrian_intention_predictor", kPedestrianIntentLayers, rng);
  f.trajectory_ = ad::Mlp::create(store, "trajectory_predictor", kTrajectoryLayers, rng);
  return f;
}

Forecaster Forecaster::bind(const ad::ParamStore & store, const ModelConfig & cfg)
{
  Forecaster f;
  f.encoder_past_ = ad::GruCell::bind(store, "encoder_past.gru", kFeatureWidth, kObsHidden);
  f.encoder_destination_ = ad::Mlp::bind(store, "encoder_destination", kDestinationLayers);
  f.encoder_latent_ = ad::Mlp::bind(store, "encoder_latent", kLatentLayers);
  f.decoder_latent_ = ad::Mlp::bind(store, "decoder_latent", kGoalDecoderLayers);
  f.rnn_future_ = ad::GruCell::bind(store, "rnn_future.gru", kDecoderHidden, kDecoderHidden);
  f.mp_ = graph::MessagePassing::bind(store, cfg.scale);
  f.vehicle_intent_ = ad::Mlp::bind(store, "vehicle_intention_predictor", kVehicleIntentLayers);
  f.pedestrian_intent_ = ad::Mlp::bind(store, "pedestrian_intention_predictor", kPedestrianIntentLayers);
  f.trajectory_ = ad::Mlp::bind(store, "trajectory_predictor", kTrajectoryLayers);
  return f;
}

Var Forecaster::encode_observation(ad::Tape & tape, std::span<const ObservationMatrix> obs) const
{
  const auto n = static_cast<Eigen::Index>(obs.size());
  Var h = tape.constant(Matrix::Zero(n, kObsHidden));
  for (int k = 0; k < kObsFrames; ++k) {
    Matrix x(n, kFeatureWidth);
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = obs[static_cast<std::size_t>(i)].row(k);
    h = encoder_past_.step(tape, tape.constant(std::move(x)), h);
  }
  return h;
}

Var Forecaster::embed_goal(ad::Tape & tape, const Var & goals) const
{
  if (goals.cols() != 2) throw NumericError("embed_goal: goals must be n x 2");
  return encoder_destination_.apply(tape, goals);
}

GoalPosterior Forecaster::goal_posterior(ad::Tape & tape, const Var & obs_enc, const Var & gt_goal,
                                         const Matrix & eta) const
{
  if (obs_enc.cols() != kObsHidden || eta.rows() != obs_enc.rows() || eta.cols() != kLatent) {
    throw NumericError("goal_posterior: expected n x 64 encodings and n x 16 noise");
  }
  GoalPosterior p;
  p.embedding = embed_goal(tape, gt_goal);
  const Var in[] = {obs_enc, p.embedding};
  const Var stats = encoder_latent_.apply(tape, ad::concat_cols(in));
  p.mu = ad::slice_cols(stats, 0, kLatent);
  p.log_sigma = ad::slice_cols(stats, kLatent, kLatent);
  p.z = p.mu + ad::hadamard(ad::exp(p.log_sigma), tape.constant(eta));
  p.goal_hat = decode_goal(tape, obs_enc, p.z);
  return p;
}

Var Forecaster::decode_goal(ad::Tape & tape, const Var & obs_enc, const Var & z) const
{
  const Var in[] = {obs_enc, z};
  return decoder_latent_.apply(tape, ad::concat_cols(in));
}

Var Forecaster::goal_sample(ad::Tape & tape, const Var & obs_enc, double tau, std::mt19937_64 & rng) const
{
  if (!(tau >= 0.0)) throw UsageError("goal_sample: tau must be non-negative");
  Matrix z = Matrix::Zero(obs_enc.rows(), kLatent);
  if (tau > 0.0) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = tau * standard_normal(rng);
    }
  }
  return decode_goal(tape, obs_enc, tape.constant(std::move(z)));
}

Rollout Forecaster::rollout(ad::Tape & tape, const SceneTensors & scene, const Var & obs_enc, const Var & goals,
                            const IntentConfig & intent) const
{
  const int n = scene.agent_count();
  if (obs_enc.rows() != n || obs_enc.cols() != kObsHidden || goals.rows() != n || goals.cols() != 2) {
    throw NumericError("rollout: expected " + std::to_string(n) + " x 64 encodings and " + std::to_string(n) +
                       " x 2 goals");
  }
  if (intent.mode == IntentMode::kOracle && intent.refresh_period < 1) {
    throw UsageError("rollout: oracle refresh period must be at least one frame");
  }

  // Off-kind intent slices are the fixed one-hot None.
  Matrix none_veh = Matrix::Zero(n, kVehicleActionCount);
  Matrix none_ped = Matrix::Zero(n, kPedestrianActionCount);
  for (int r : scene.pedestrian_rows) none_veh(r, static_cast<int>(VehicleAction::kNone)) = 1.0;
  for (int r : scene.vehicle_rows) none_ped(r, static_cast<int>(PedestrianAction::kNone)) = 1.0;
  const std::vector<bool> veh_mask = intent_mask(AgentKind::kVehicle);
  const std::vector<bool> ped_mask = intent_mask(AgentKind::kPedestrian);

  Var pos = tape.constant(vec2_rows(scene.start_positions));
  Var vel = tape.constant(vec2_rows(scene.start_velocities));
  const Var init[] = {obs_enc, embed_goal(tape, goals)};
  Var hidden = ad::concat_cols(init);

  Rollout out;
  for (int m = 0; m < kFutFrames; ++m) {
    const std::vector<Vec2> p_now = rows_vec2(pos.value());
    const std::vector<Vec2> v_now = rows_vec2(vel.value());
    const graph::SceneGraph g = graph::build_scene_graph(p_now, v_now, Matrix(), scene.roads);
    const Var edges = graph::edge_feature_var(tape, g, pos, vel);
    const Var h_mp = mp_.apply(tape, g, hidden, edges).hidden;

    Var veh8;
    Var ped5;
    Var veh_logits;
    Var ped_logits;
    if (intent.mode == IntentMode::kPredicted) {
      veh8 = tape.constant(none_veh);
      ped5 = tape.constant(none_ped);
      if (!scene.vehicle_rows.empty()) {
        veh_logits = vehicle_intent_.apply(tape, ad::gather_rows(h_mp, scene.vehicle_rows));
        veh8 = veh8 + ad::scatter_add_rows(ad::masked_softmax(veh_logits, veh_mask), scene.vehicle_rows, n);
      }
      if (!scene.pedestrian_rows.empty()) {
        ped_logits = pedestrian_intent_.apply(tape, ad::gather_rows(h_mp, scene.pedestrian_rows));
        ped5 = ped5 + ad::scatter_add_rows(ad::masked_softmax(ped_logits, ped_mask), scene.pedestrian_rows, n);
      }
    } else {
      const int held = m - m % intent.refresh_period;
      Matrix v = none_veh;
      Matrix p = none_ped;
      for (int r : scene.vehicle_rows) v(r, scene.gt_intents[static_cast<std::size_t>(r)][held]) = 1.0;
      for (int r : scene.pedestrian_rows) p(r, scene.gt_intents[static_cast<std::size_t>(r)][held]) = 1.0;
      veh8 = tape.constant(std::move(v));
      ped5 = tape.constant(std::move(p));
    }

    const Var head_in[] = {h_mp, veh8, ped5};
    vel = trajectory_.apply(tape, ad::concat_cols(head_in));
    if (!vel.value().allFinite()) {
      throw NumericError("rollout: non-finite velocity at step " + std::to_string(m));
    }
    pos = pos + vel;
    hidden = rnn_future_.step(tape, h_mp, hidden);

    out.velocity.push_back(vel);
    out.position.push_back(pos);
    out.vehicle_logits.push_back(veh_logits);
    out.pedestrian_logits.push_back(ped_logits);
    out.vehicle_intent.push_back(veh8.value());
    out.pedestrian_intent.push_back(ped5.value());
  }
  return out;
}

ForecastResult forecast(const ad::ParamStore & store, const Forecaster & model, const SceneTensors & scene,
                        int n_samples, double tau, const IntentConfig & intent, std::mt19937_64 & rng)
{
  if (n_samples < 1) throw UsageError("forecast: number of samples must be at least 1");
  ForecastResult result;
  result.scenario_id = scene.scenario_id;
  result.anchor_t = scene.anchor_t;
  result.n_samples = n_samples;
  result.tau = tau;
  for (int i = 0; i < scene.agent_count(); ++i) {
    result.agents.push_back({scene.agent_ids[static_cast<std::size_t>(i)], scene.kinds[static_cast<std::size_t>(i)], {}});
  }

  ad::Tape enc_tape(&store, /*record=*/false);
  const Matrix enc = model.encode_observation(enc_tape, scene.observations).value();
  for (int s = 0; s < n_samples; ++s) {
    ad::Tape tape(&store, /*record=*/false);
    const Var obs_enc = tape.constant(enc);
    const Var goals = model.goal_sample(tape, obs_enc, tau, rng);
    const Rollout r = model.rollout(tape, scene, obs_enc, goals, intent);
    for (int i = 0; i < scene.agent_count(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      SampleForecast f;
      f.goal = scene.origins[ui] + Vec2{goals.value()(i, 0), goals.value()(i, 1)};
      for (int m = 0; m < kFutFrames; ++m) {
        const Matrix & p = r.position[static_cast<std::size_t>(m)].value();
        const Matrix & v = r.velocity[static_cast<std::size_t>(m)].value();
        f.positions[m] = scene.reference + Vec2{p(i, 0), p(i, 1)};
        f.velocities[m] = {v(i, 0), v(i, 1)};
        const Matrix & dist = scene.kinds[ui] == AgentKind::kVehicle ? r.vehicle_intent[static_cast<std::size_t>(m)]
                                                                       : r.pedestrian_intent[static_cast<std::size_t>(m)];
        f.intents[m].assign(dist.row(i).data(), dist.row(i).data() + dist.cols());
      }
      result.agents[ui].samples.push_back(std::move(f));
    }
  }
  return result;
}

}  // namespace jointcast::model
