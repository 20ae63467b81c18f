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

#include "grad_cases.hpp"
#include "jointcast/error.hpp"
#include "jointcast/forecaster.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace jointcast::model
{
namespace
{

using ad::Matrix;
using ad::ParamStore;
using ad::Tape;
using ad::Var;

void zero_all(ParamStore & store)
{
  for (std::size_t p = 0; p < store.size(); ++p) store.value(ad::ParamId{p}).setZero();
}

Matrix goal_rows(const SceneTensors & s)
{
  Matrix g(s.agent_count(), 2);
  for (int i = 0; i < s.agent_count(); ++i) g.row(i) << s.gt_goals[i].x, s.gt_goals[i].y;
  return g;
}

/// Scenario whose coordinates sit on a 2^-10 grid so translations by small powers of two are exact.
Scenario dyadic_scenario(std::uint64_t seed)
{
  synth::GenConfig cfg;
  cfg.seed = seed;
  cfg.n_scenarios = 1;
  cfg.n_vehicles = 3;
  cfg.n_pedestrians = 2;
  Scenario s = synth::generate_corpus(cfg).front();
  for (auto & t : s.tracks) {
    for (auto & f : t.frames) {
      f.position = {std::ldexp(std::round(std::ldexp(f.position.x, 10)), -10),
                    std::ldexp(std::round(std::ldexp(f.position.y, 10)), -10)};
    }
  }
  return s;
}

TEST(ModelShapes, ParameterTableMatchesTheArchitecture)
{
  ParamStore store;
  Forecaster::create(store, 1);
  auto shape = [&](const char * name) {
    const Matrix & m = store.value(store.id(name));
    return std::pair<long, long>(m.rows(), m.cols());
  };
  EXPECT_EQ(shape("encoder_past.gru.w_ih"), std::pair(21L, 192L));
  EXPECT_EQ(shape("encoder_past.gru.w_hh"), std::pair(64L, 192L));
  EXPECT_EQ(shape("encoder_destination.linear_1.weight"), std::pair(2L, 8L));
  EXPECT_EQ(shape("encoder_destination.linear_3.weight"), std::pair(16L, 16L));
  EXPECT_EQ(shape("encoder_latent.linear_1.weight"), std::pair(80L, 8L));
  EXPECT_EQ(shape("encoder_latent.linear_3.weight"), std::pair(50L, 32L));
  EXPECT_EQ(shape("decoder_latent.linear_1.weight"), std::pair(80L, 1024L));
  EXPECT_EQ(shape("decoder_latent.linear_4.weight"), std::pair(1024L, 2L));
  EXPECT_EQ(shape("rnn_future.gru.w_ih"), std::pair(80L, 240L));
  EXPECT_EQ(shape("vehicle_intention_predictor.linear_3.weight"), std::pair(128L, 8L));
  EXPECT_EQ(shape("pedestrian_intention_predictor.linear_3.weight"), std::pair(128L, 5L));
  EXPECT_EQ(shape("trajectory_predictor.linear_1.weight"), std::pair(93L, 80L));
  EXPECT_EQ(shape("trajectory_predictor.linear_3.weight"), std::pair(40L, 2L));
  EXPECT_EQ(shape("edge_attr.linear_1.weight"), std::pair(8L, 16L));
  EXPECT_EQ(shape("transformer_conv.gamma.weight"), std::pair(80L, 80L));
}

TEST(ModelShapes, BindFindsEveryCreatedParameter)
{
  ParamStore store;
  Forecaster::create(store, 2);
  EXPECT_NO_THROW(Forecaster::bind(store));
  ParamStore empty;
  EXPECT_THROW(Forecaster::bind(empty), Error);
}

TEST(EncodeObservation, ZeroFeaturesAndParametersGiveZero)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 3);
  zero_all(store);
  std::vector<ObservationMatrix> obs(2, ObservationMatrix::Zero());
  Tape tape(&store, false);
  const Var enc = f.encode_observation(tape, obs);
  EXPECT_EQ(enc.cols(), kObsHidden);
  EXPECT_TRUE(enc.value().isZero(0.0));
}

TEST(EncodeObservation, TranslationInvariant)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 4);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Scenario s = dyadic_scenario(seed);
    const auto before = window_scenario(s);
    for (auto & t : s.tracks) {
      for (auto & fr : t.frames) fr.position = fr.position + Vec2{64.0, -128.0};
    }
    const auto after = window_scenario(s);
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); i += 7) {
      Tape tape(&store, false);
      const ObservationMatrix a[] = {encode_frame_features(before[i])};
      const ObservationMatrix b[] = {encode_frame_features(after[i])};
      const Matrix ea = f.encode_observation(tape, a).value();
      const Matrix eb = f.encode_observation(tape, b).value();
      EXPECT_EQ(ea, eb);
    }
  }
}

TEST(GoalPosterior, ZeroNoiseGivesMean)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 5);
  const SceneTensors scene = testing::three_agent_scene(5);
  Tape tape(&store, false);
  const Var enc = f.encode_observation(tape, scene.observations);
  const GoalPosterior p = f.goal_posterior(tape, enc, tape.constant(goal_rows(scene)),
                                           Matrix::Zero(scene.agent_count(), kLatent));
  EXPECT_EQ(p.z.value(), p.mu.value());
  EXPECT_EQ(p.goal_hat.cols(), 2);
}

TEST(GoalPosterior, ZeroParametersGiveStandardNormal)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 6);
  zero_all(store);
  const SceneTensors scene = testing::three_agent_scene(6);
  Tape tape(&store, false);
  const Var enc = f.encode_observation(tape, scene.observations);
  std::mt19937_64 rng(1);
  const GoalPosterior p = f.goal_posterior(tape, enc, tape.constant(goal_rows(scene)),
                                           testing::random_matrix(scene.agent_count(), kLatent, rng));
  EXPECT_TRUE(p.mu.value().isZero(0.0));
  EXPECT_TRUE(p.log_sigma.value().isZero(0.0));
  EXPECT_EQ(ad::kl_diag_gaussian(p.mu, p.log_sigma).scalar(), 0.0);
}

TEST(GoalPosterior, KlPlusReconstructionPassesGradCheck)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 7);
  const SceneTensors scene = testing::three_agent_scene(7);
  std::mt19937_64 rng(7);
  Matrix eta(scene.agent_count(), kLatent);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = standard_normal(rng);
  const Matrix goals = goal_rows(scene);
  const ad::ScalarFn fn = [&](Tape & t) {
    const Var enc = f.encode_observation(t, scene.observations);
    const GoalPosterior p = f.goal_posterior(t, enc, t.constant(goals), eta);
    return ad::kl_diag_gaussian(p.mu, p.log_sigma) + ad::sum_squares(p.goal_hat - t.constant(goals));
  };
  ad::GradCheckOptions opts;
  opts.max_coords_per_param = 6;
  const ad::GradCheckReport r = ad::grad_check(store, fn, opts);
  // The loss is in the thousands, so small coordinates sit under the difference round-off.
  EXPECT_TRUE(testing::exact_to_roundoff(r)) << testing::describe(r);
}

TEST(GoalSample, ZeroScaleIsDeterministicAndDecodesZero)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 8);
  const SceneTensors scene = testing::three_agent_scene(8);
  Tape tape(&store, false);
  const Var enc = f.encode_observation(tape, scene.observations);
  std::mt19937_64 rng(8);
  const Matrix a = f.goal_sample(tape, enc, 0.0, rng).value();
  const Matrix b = f.goal_sample(tape, enc, 0.0, rng).value();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, f.decode_goal(tape, enc, tape.constant(Matrix::Zero(scene.agent_count(), kLatent))).value());
}

TEST(GoalSample, TruncatedScaleGivesDistinctGoals)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 9);
  const SceneTensors scene = testing::three_agent_scene(9);
  Tape tape(&store, false);
  const Var enc = f.encode_observation(tape, scene.observations);
  std::mt19937_64 rng(9);
  std::set<std::pair<double, double>> seen;
  for (int k = 0; k < 20; ++k) {
    const Matrix g = f.goal_sample(tape, enc, kMultiShotTau, rng).value();
    seen.insert({g(0, 0), g(0, 1)});
  }
  EXPECT_EQ(seen.size(), 20u);
  EXPECT_EQ(tau_for_samples(1), 0.0);
  EXPECT_EQ(tau_for_samples(20), 1.1);
}

TEST(Rollout, ZeroParametersKeepAnIsolatedAgentStill)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 10);
  zero_all(store);
  SceneTensors scene = testing::three_agent_scene(10);
  // Keep only agent 0.
  SceneTensors one;
  one.scenario_id = scene.scenario_id;
  one.reference = scene.reference;
  one.agent_ids = {scene.agent_ids[0]};
  one.kinds = {scene.kinds[0]};
  (one.kinds[0] == AgentKind::kVehicle ? one.vehicle_rows : one.pedestrian_rows).push_back(0);
  one.observations = {scene.observations[0]};
  one.origins = {scene.origins[0]};
  one.start_positions = {scene.start_positions[0]};
  one.start_velocities = {scene.start_velocities[0]};
  one.gt_goals = {scene.gt_goals[0]};
  one.gt_positions = {scene.gt_positions[0]};
  one.gt_velocities = {scene.gt_velocities[0]};
  one.gt_intents = {scene.gt_intents[0]};
  one.future_flags = {scene.future_flags[0]};
  std::mt19937_64 rng(1);
  const ForecastResult r = forecast(store, f, one, 1, 0.0, {}, rng);
  for (int m = 0; m < kFutFrames; ++m) {
    EXPECT_EQ(r.agents[0].samples[0].velocities[m], (Vec2{0.0, 0.0}));
    EXPECT_EQ(r.agents[0].samples[0].positions[m], one.origins[0]);
  }
}

TEST(Rollout, IntentDistributionsSumToOneAndVelocitiesChainPositions)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 11);
  const SceneTensors scene = testing::three_agent_scene(11);
  std::mt19937_64 rng(11);
  const ForecastResult r = forecast(store, f, scene, 3, kMultiShotTau, {}, rng);
  ASSERT_EQ(r.agents.size(), 3u);
  for (std::size_t i = 0; i < r.agents.size(); ++i) {
    const AgentForecast & a = r.agents[i];
    ASSERT_EQ(a.samples.size(), 3u);
    for (const SampleForecast & s : a.samples) {
      Vec2 prev = scene.origins[i];
      for (int m = 0; m < kFutFrames; ++m) {
        double total = 0.0;
        const auto mask = intent_mask(a.kind);
        for (std::size_t c = 0; c < s.intents[m].size(); ++c) {
          total += s.intents[m][c];
          if (!mask[c]) {
            EXPECT_EQ(s.intents[m][c], 0.0);
          }
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_EQ(s.intents[m].size(), static_cast<std::size_t>(action_count(a.kind)));
        const Vec2 d = s.positions[m] - prev;
        EXPECT_NEAR(d.x, s.velocities[m].x, 1e-9);
        EXPECT_NEAR(d.y, s.velocities[m].y, 1e-9);
        prev = s.positions[m];
      }
    }
  }
}

TEST(Rollout, OracleIntentsFollowHoldSchedule)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 12);
  const SceneTensors scene = testing::three_agent_scene(12);
  for (double fps : kOracleFps) {
    const int period = refresh_period_for_fps(fps);
    Tape tape(&store, false);
    const Var enc = f.encode_observation(tape, scene.observations);
    const Rollout r = f.rollout(tape, scene, enc, tape.constant(goal_rows(scene)), {IntentMode::kOracle, period});
    for (int m = 0; m < kFutFrames; ++m) {
      for (int i = 0; i < scene.agent_count(); ++i) {
        const Matrix & dist = scene.kinds[i] == AgentKind::kVehicle ? r.vehicle_intent[m] : r.pedestrian_intent[m];
        const int held = scene.gt_intents[i][m - m % period];
        for (Eigen::Index c = 0; c < dist.cols(); ++c) EXPECT_EQ(dist(i, c), c == held ? 1.0 : 0.0);
      }
    }
  }
  EXPECT_EQ(refresh_period_for_fps(5.0), 1);
  EXPECT_EQ(refresh_period_for_fps(1.0), 5);
  EXPECT_EQ(refresh_period_for_fps(1.67), 3);
  EXPECT_EQ(refresh_period_for_fps(0.5), 10);
  EXPECT_THROW(refresh_period_for_fps(3.0), UsageError);
}

TEST(Rollout, TranslationEquivariant)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 13);
  const Vec2 shift{64.0, -128.0};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Scenario s = dyadic_scenario(seed);
    const auto scenes = build_scenes(s);
    for (auto & t : s.tracks) {
      for (auto & fr : t.frames) fr.position = fr.position + shift;
    }
    for (auto & rp : s.road_points) rp.position = rp.position + shift;
    const auto moved = build_scenes(s);
    ASSERT_EQ(scenes.size(), moved.size());
    for (std::size_t k = 0; k < scenes.size(); k += 5) {
      std::mt19937_64 ra(k), rb(k);
      const ForecastResult a = forecast(store, f, prepare_scene(scenes[k]), 2, kMultiShotTau, {}, ra);
      const ForecastResult b = forecast(store, f, prepare_scene(moved[k]), 2, kMultiShotTau, {}, rb);
      for (std::size_t i = 0; i < a.agents.size(); ++i) {
        for (std::size_t n = 0; n < 2; ++n) {
          const SampleForecast & x = a.agents[i].samples[n];
          const SampleForecast & y = b.agents[i].samples[n];
          for (int m = 0; m < kFutFrames; ++m) {
            EXPECT_EQ(x.intents[m], y.intents[m]);
            EXPECT_NEAR(y.positions[m].x - x.positions[m].x, shift.x, 1e-9);
            EXPECT_NEAR(y.positions[m].y - x.positions[m].y, shift.y, 1e-9);
          }
        }
      }
    }
  }
}

TEST(Rollout, SameSeedSameForecast)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 14);
  const SceneTensors scene = testing::three_agent_scene(14);
  std::mt19937_64 ra(3), rb(3);
  const ForecastResult a = forecast(store, f, scene, 4, kMultiShotTau, {}, ra);
  const ForecastResult b = forecast(store, f, scene, 4, kMultiShotTau, {}, rb);
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    for (std::size_t n = 0; n < 4; ++n) {
      EXPECT_EQ(a.agents[i].samples[n].positions, b.agents[i].samples[n].positions);
      EXPECT_EQ(a.agents[i].samples[n].intents, b.agents[i].samples[n].intents);
      EXPECT_EQ(a.agents[i].samples[n].goal, b.agents[i].samples[n].goal);
    }
  }
}

TEST(Rollout, IntentConditioningReachesVelocity)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 15);
  const SceneTensors scene = testing::three_agent_scene(15);
  for (int i = 0; i < scene.agent_count(); ++i) {
    Tape tape(&store);
    const Var enc = f.encode_observation(tape, scene.observations);
    const Rollout r = f.rollout(tape, scene, enc, tape.constant(goal_rows(scene)));
    const Var logits = scene.kinds[i] == AgentKind::kVehicle ? r.vehicle_logits[0] : r.pedestrian_logits[0];
    Matrix seed = Matrix::Zero(scene.agent_count(), 2);
    seed(i, 0) = 1.0;
    tape.backward(r.velocity[0], seed);
    const Matrix g = tape.grad(logits);
    const auto & rows = scene.kinds[i] == AgentKind::kVehicle ? scene.vehicle_rows : scene.pedestrian_rows;
    const auto row = std::find(rows.begin(), rows.end(), i) - rows.begin();
    EXPECT_GT(g.row(row).cwiseAbs().maxCoeff(), 0.0) << "agent " << i;
  }
}

TEST(Rollout, NonFiniteVelocityNamesTheStep)
{
  ParamStore store;
  const Forecaster f = Forecaster::create(store, 16);
  store.value(store.id("trajectory_predictor.linear_3.bias"))(0, 0) = std::nan("");
  const SceneTensors scene = testing::three_agent_scene(16);
  std::mt19937_64 rng(1);
  try {
    forecast(store, f, scene, 1, 0.0, {}, rng);
    FAIL();
  } catch (const NumericError & e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(PrepareScene, GroundTruthIsConsistent)
{
  const SceneTensors s = testing::three_agent_scene(17);
  ASSERT_EQ(s.agent_count(), 3);
  EXPECT_EQ(s.vehicle_rows.size() + s.pedestrian_rows.size(), 3u);
  EXPECT_EQ(s.start_positions[0], (Vec2{0.0, 0.0}));
  for (int i = 0; i < s.agent_count(); ++i) {
    const Vec2 end = s.gt_positions[i][kFutFrames - 1];
    EXPECT_NEAR(s.gt_goals[i].x, end.x - s.origins[i].x, 1e-12);
    Vec2 p = s.origins[i];
    for (int m = 0; m < kFutFrames; ++m) p = p + s.gt_velocities[i][m];
    EXPECT_NEAR(p.x, end.x, 1e-9);
    EXPECT_NEAR(p.y, end.y, 1e-9);
  }
}

}  // namespace
}  // namespace jointcast::model
