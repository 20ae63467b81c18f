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
#include "jointcast/ad/checkpoint.hpp"
#include "jointcast/error.hpp"
#include "jointcast/training.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace jointcast::train
{
namespace
{

using ad::Matrix;
using ad::Tape;
using ad::Var;
using model::SceneTensors;

std::vector<SceneTensors> small_corpus(std::uint64_t seed, int scenarios = 2)
{
  synth::GenConfig cfg;
  cfg.seed = seed;
  cfg.n_scenarios = scenarios;
  cfg.n_vehicles = 2;
  cfg.n_pedestrians = 1;
  cfg.duration_s = 9.0;
  cfg.turn_prob = 0.5;
  std::vector<SceneTensors> out;
  for (const Scenario & s : synth::generate_corpus(cfg)) {
    for (const SceneSample & sc : build_scenes(s)) out.push_back(model::prepare_scene(sc));
  }
  return out;
}

Matrix rows(std::span<const Vec2> v)
{
  Matrix m(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << v[i].x, v[i].y;
  return m;
}

/// Posterior and rollout built from constants: perfect goal and velocities shifted by `vel_error`,
/// intent logits `margin` above zero at the ground-truth class.
struct FakeOutputs
{
  model::GoalPosterior post;
  model::Rollout roll;
};

FakeOutputs fake_outputs(Tape & tape, const SceneTensors & s, Vec2 vel_error, double margin)
{
  FakeOutputs f;
  const int n = s.agent_count();
  f.post.mu = tape.constant(Matrix::Zero(n, model::kLatent));
  f.post.log_sigma = tape.constant(Matrix::Zero(n, model::kLatent));
  f.post.goal_hat = tape.constant(rows(s.gt_goals));
  for (int m = 0; m < kFutFrames; ++m) {
    std::vector<Vec2> v;
    for (int i = 0; i < n; ++i) v.push_back(s.gt_velocities[i][m] + vel_error);
    f.roll.velocity.push_back(tape.constant(rows(v)));
    auto logits = [&](const std::vector<int> & r, int width) {
      Matrix l = Matrix::Zero(static_cast<Eigen::Index>(r.size()), width);
      for (std::size_t k = 0; k < r.size(); ++k) l(static_cast<Eigen::Index>(k), s.gt_intents[r[k]][m]) = margin;
      return r.empty() ? Var() : tape.leaf(l);
    };
    f.roll.vehicle_logits.push_back(logits(s.vehicle_rows, kVehicleActionCount));
    f.roll.pedestrian_logits.push_back(logits(s.pedestrian_rows, kPedestrianActionCount));
  }
  return f;
}

LossBreakdown losses_for(const SceneTensors & s, Vec2 vel_error, double margin, const TrainConfig & cfg = {})
{
  ad::ParamStore store;
  Tape tape(&store);
  const ClassWeights w = corpus_class_weights(std::span(&s, 1));
  const SceneTensors * batch[] = {&s};
  const FakeOutputs f = fake_outputs(tape, s, vel_error, margin);
  return compute_losses(tape, s, f.post, f.roll, w, cfg, loss_norms(batch, w)).breakdown;
}

TEST(ClassWeights, Examples)
{
  EXPECT_EQ(class_weights(std::vector<double>{5, 5, 5}), (std::vector<double>{3, 3, 3}));
  const auto w = class_weights(std::vector<double>{900, 100});
  EXPECT_DOUBLE_EQ(w[1] / w[0], 9.0);
  EXPECT_EQ(class_weights(std::vector<double>{4, 0, 4})[1], 0.0);
  EXPECT_THROW(class_weights(std::vector<double>{0, 0}), NumericError);
}

TEST(ClassWeights, CorpusWeightsCoverOnlyIntentClasses)
{
  const auto corpus = small_corpus(1);
  const ClassWeights w = corpus_class_weights(corpus);
  ASSERT_EQ(w.vehicle.size(), static_cast<std::size_t>(kVehicleActionCount));
  ASSERT_EQ(w.pedestrian.size(), static_cast<std::size_t>(kPedestrianActionCount));
  for (int c = kVehicleIntentClasses; c < kVehicleActionCount; ++c) EXPECT_EQ(w.vehicle[c], 0.0);
  for (int c = kPedestrianIntentClasses; c < kPedestrianActionCount; ++c) EXPECT_EQ(w.pedestrian[c], 0.0);
  for (double x : w.vehicle) EXPECT_GE(x, 0.0);
}

TEST(Losses, PerfectFitIsZero)
{
  for (const SceneTensors & s : small_corpus(2)) {
    const LossBreakdown b = losses_for(s, {0.0, 0.0}, 2000.0);
    EXPECT_EQ(b.l_final, 0.0);
    EXPECT_EQ(b.l_gpn, 0.0);
  }
}

TEST(Losses, ConstantVelocityErrorGivesItsNorm)
{
  const SceneTensors s = small_corpus(3).front();
  EXPECT_NEAR(losses_for(s, {0.3, 0.4}, 2000.0).l_traj, 0.5, 1e-12);
}

TEST(Losses, FinalIsTheWeightedSumAndLinearInLambda2)
{
  const SceneTensors s = small_corpus(4).front();
  TrainConfig cfg;
  const LossBreakdown a = losses_for(s, {0.1, -0.2}, 0.5, cfg);
  EXPECT_NEAR(a.l_final, cfg.lambda1 * a.l_gpn + cfg.lambda2 * a.l_int + cfg.lambda3 * a.l_traj, 1e-9);
  EXPECT_GT(a.l_int, 0.0);
  cfg.lambda2 *= 2.0;
  const LossBreakdown b = losses_for(s, {0.1, -0.2}, 0.5, cfg);
  EXPECT_DOUBLE_EQ(b.l_final - a.l_final, 100.0 * a.l_int);
  double per_class = 0.0;
  for (double v : a.vehicle_class) per_class += v;
  for (double v : a.pedestrian_class) per_class += v;
  EXPECT_NEAR(per_class, a.l_int, 1e-12);
}

TEST(Losses, IntentLossFallsAsPredictionsSharpen)
{
  const SceneTensors s = small_corpus(5).front();
  double prev = std::numeric_limits<double>::infinity();
  for (double margin : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double l = losses_for(s, {0.0, 0.0}, margin).l_int;
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(Losses, DroppingIntentWeightLeavesTrajectoryLoss)
{
  const auto corpus = small_corpus(6);
  const ClassWeights w = corpus_class_weights(corpus);
  ad::ParamStore store;
  const model::Forecaster net = model::Forecaster::create(store, 6);
  const SceneTensors * batch[] = {&corpus[0]};
  const LossNorms norms = loss_norms(batch, w);
  const Matrix eta = Matrix::Zero(corpus[0].agent_count(), model::kLatent);
  TrainConfig with, without;
  without.lambda2 = 0.0;
  Tape a(&store), b(&store);
  const LossBreakdown x = scene_forward(a, net, corpus[0], eta, w, with, norms).breakdown;
  const LossBreakdown y = scene_forward(b, net, corpus[0], eta, w, without, norms).breakdown;
  EXPECT_EQ(x.l_traj, y.l_traj);
  EXPECT_EQ(x.l_int, y.l_int);
  EXPECT_NEAR(x.l_final - y.l_final, 100.0 * x.l_int, 1e-9 * x.l_final);
}

TEST(Losses, BatchObjectivePassesGradCheck)
{
  const auto corpus = small_corpus(7);
  ad::ParamStore store;
  const model::Forecaster net = model::Forecaster::create(store, 7);
  const ClassWeights w = corpus_class_weights(corpus);
  const SceneTensors * batch[] = {&corpus[0], &corpus[3]};
  const LossNorms norms = loss_norms(batch, w);
  std::mt19937_64 rng(7);
  std::vector<Matrix> etas;
  for (const auto * s : batch) etas.push_back(testing::random_matrix(s->agent_count(), model::kLatent, rng));
  const TrainConfig cfg;
  const ad::ScalarFn fn = [&](Tape & t) {
    Var total;
    for (std::size_t k = 0; k < 2; ++k) {
      const Var o = scene_forward(t, net, *batch[k], etas[k], w, cfg, norms).objective;
      total = total.valid() ? total + o : o;
    }
    return total;
  };
  ad::GradCheckOptions opts;
  opts.max_coords_per_param = 2;
  opts.seed = 7;
  const ad::GradCheckReport r = ad::grad_check(store, fn, opts);
  EXPECT_TRUE(testing::exact_to_roundoff(r)) << testing::describe(r);
}

TEST(Sampler, RareScenesAreReplicated)
{
  const auto corpus = small_corpus(8, 3);
  std::size_t rare = 0;
  for (const auto & s : corpus) rare += is_rare(s) ? 1 : 0;
  ASSERT_GT(rare, 0u);
  SceneSampler sampler(corpus, 5, 1);
  EXPECT_EQ(sampler.pool_size(), corpus.size() + 4 * rare);
  // One epoch visits each rare scene five times.
  std::vector<int> seen(corpus.size(), 0);
  for (std::size_t i : sampler.next_batch(static_cast<int>(sampler.pool_size()))) ++seen[i];
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(seen[i], is_rare(corpus[i]) ? 5 : 1);
  SceneSampler again(corpus, 5, 1);
  SceneSampler other(corpus, 5, 2);
  SceneSampler same(corpus, 5, 1);
  EXPECT_EQ(again.next_batch(50), same.next_batch(50));
  EXPECT_NE(SceneSampler(corpus, 5, 1).next_batch(50), other.next_batch(50));
}

TrainConfig tiny_config()
{
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.max_steps = 10;
  cfg.seed = 99;
  cfg.lr = 1e-3;
  return cfg;
}

TEST(Train, ZeroStepsReturnsInitialisation)
{
  const auto corpus = small_corpus(9);
  TrainConfig cfg = tiny_config();
  cfg.max_steps = 0;
  const TrainResult r = train(corpus, cfg);
  ad::ParamStore init;
  model::Forecaster::create(init, derive_seed(cfg.seed, 1));
  EXPECT_TRUE(r.store.identical(init));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, SameSeedSameLogAndParameters)
{
  const auto corpus = small_corpus(10);
  const TrainResult a = train(corpus, tiny_config());
  const TrainResult b = train(corpus, tiny_config());
  ASSERT_EQ(a.log.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(a.log[k].l_final, b.log[k].l_final);
    EXPECT_EQ(a.log[k].l_gpn, b.log[k].l_gpn);
  }
  EXPECT_TRUE(a.store.identical(b.store));
  EXPECT_EQ(format_loss_log(a.log), format_loss_log(b.log));
  EXPECT_EQ(a.store.step(), 10u);
}

TEST(Train, LossDecreasesOnATinyCorpus)
{
  const auto corpus = small_corpus(11, 1);
  TrainConfig cfg = tiny_config();
  cfg.max_steps = 60;
  const TrainResult r = train(corpus, cfg);
  auto mean = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += r.log[k].l_final;
    return s / static_cast<double>(hi - lo);
  };
  EXPECT_LT(mean(50, 60), 0.5 * mean(0, 10));
}

TEST(Train, NonFiniteLossAbortsWithStepAndCheckpoint)
{
  auto corpus = small_corpus(12);
  for (auto & s : corpus) s.gt_velocities[0][3].x = std::nan("");
  const auto path = testing::temp_dir("train_fail") / "last_good.jckp";
  TrainHooks hooks;
  hooks.failure_checkpoint = path;
  try {
    train(corpus, tiny_config(), hooks);
    FAIL();
  } catch (const NumericError & e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
  ASSERT_TRUE(std::filesystem::exists(path));
  const ad::LoadedCheckpoint ck = ad::load_checkpoint(path);
  ad::ParamStore init;
  model::Forecaster::create(init, derive_seed(tiny_config().seed, 1));
  EXPECT_TRUE(ck.store.identical(init));
}

TEST(Train, ConfigValidation)
{
  const auto corpus = small_corpus(13);
  TrainConfig cfg = tiny_config();
  cfg.batch = 0;
  EXPECT_THROW(train(corpus, cfg), UsageError);
  cfg = tiny_config();
  cfg.lambda2 = -1.0;
  EXPECT_THROW(train(corpus, cfg), UsageError);
  EXPECT_THROW(train(std::span<const SceneTensors>(), tiny_config()), UsageError);
}

TEST(Train, LossLogFormat)
{
  LossBreakdown b;
  b.l_gpn = 1.0;
  b.l_int = 0.25;
  b.l_traj = 0.5;
  b.l_final = 126.0;
  const std::vector<LossBreakdown> log = {b, b};
  EXPECT_EQ(format_loss_log(log),
            "step,l_gpn,l_int,l_traj,l_final\n0,1.000000,0.250000,0.500000,126.000000\n"
            "1,1.000000,0.250000,0.500000,126.000000\n");
}

TEST(Train, MetadataRoundTrip)
{
  TrainConfig cfg;
  cfg.model.scale = graph::AttentionScale::kDegree;
  EXPECT_EQ(model_config_from_metadata(checkpoint_metadata(cfg)).scale, graph::AttentionScale::kDegree);
  EXPECT_EQ(model_config_from_metadata(checkpoint_metadata(TrainConfig{})).scale, graph::AttentionScale::kDimension);
  EXPECT_THROW(model_config_from_metadata("{}"), SchemaError);
  EXPECT_THROW(model_config_from_metadata("not json"), SchemaError);
}

}  // namespace
}  // namespace jointcast::train
