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

#include "jointcast/training.hpp"

#include "jointcast/ad/adam.hpp"
#include "jointcast/ad/checkpoint.hpp"
#include "jointcast/ad/layers.hpp"
#include "jointcast/error.hpp"
#include "jointcast/random.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace jointcast::train
{

using ad::Matrix;
using ad::Var;

void validate(const TrainConfig & cfg)
{
  auto non_negative = [](double v, const char * name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw UsageError(std::string("train config: ") + name + " must be a finite non-negative number");
    }
  };
  non_negative(cfg.lambda1, "lambda1");
  non_negative(cfg.lambda2, "lambda2");
  non_negative(cfg.lambda3, "lambda3");
  non_negative(cfg.alpha1, "alpha1");
  non_negative(cfg.alpha2, "alpha2");
  non_negative(cfg.clip_norm, "clip_norm");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) throw UsageError("train config: lr must be positive");
  if (cfg.batch < 1) throw UsageError("train config: batch must be at least 1");
  if (cfg.max_steps < 0) throw UsageError("train config: max_steps must be non-negative");
  if (cfg.augment < 1) throw UsageError("train config: augment must be at least 1");
}

std::vector<double> class_weights(std::span<const double> counts)
{
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw NumericError("class_weights: counts must be non-negative");
    total += c;
  }
  if (total <= 0.0) throw NumericError("class_weights: every class count is zero");
  std::vector<double> w;
  for (double c : counts) w.push_back(c > 0.0 ? total / c : 0.0);
  return w;
}

ClassWeights corpus_class_weights(std::span<const model::SceneTensors> scenes)
{
  std::vector<double> veh(static_cast<std::size_t>(kVehicleIntentClasses), 0.0);
  std::vector<double> ped(static_cast<std::size_t>(kPedestrianIntentClasses), 0.0);
  for (const auto & s : scenes) {
    for (int i = 0; i < s.agent_count(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      auto & counts = s.kinds[ui] == AgentKind::kVehicle ? veh : ped;
      for (int c : s.gt_intents[ui]) {
        if (c < static_cast<int>(counts.size())) counts[static_cast<std::size_t>(c)] += 1.0;
      }
    }
  }
  auto expand = [](const std::vector<double> & counts, int width) {
    std::vector<double> w(static_cast<std::size_t>(width), 0.0);
    if (std::accumulate(counts.begin(), counts.end(), 0.0) <= 0.0) return w;
    const std::vector<double> active = class_weights(counts);
    std::copy(active.begin(), active.end(), w.begin());
    return w;
  };
  return {expand(veh, kVehicleActionCount), expand(ped, kPedestrianActionCount)};
}

LossBreakdown & LossBreakdown::operator+=(const LossBreakdown & o)
{
  kl += o.kl;
  reconstruction += o.reconstruction;
  l_gpn += o.l_gpn;
  l_int += o.l_int;
  l_traj += o.l_traj;
  l_final += o.l_final;
  for (std::size_t c = 0; c < vehicle_class.size(); ++c) vehicle_class[c] += o.vehicle_class[c];
  for (std::size_t c = 0; c < pedestrian_class.size(); ++c) pedestrian_class[c] += o.pedestrian_class[c];
  return *this;
}

LossNorms loss_norms(std::span<const model::SceneTensors * const> batch, const ClassWeights & weights)
{
  LossNorms n;
  for (const auto * s : batch) {
    n.agents += s->agent_count();
    for (int i = 0; i < s->agent_count(); ++i) {
      const auto & w = weights.of(s->kinds[static_cast<std::size_t>(i)]);
      for (int c : s->gt_intents[static_cast<std::size_t>(i)]) n.intent_frames += w[static_cast<std::size_t>(c)] > 0.0 ? 1.0 : 0.0;
    }
  }
  n.traj_frames = n.agents * kFutFrames;
  return n;
}

namespace
{

Matrix vec2_rows(std::span<const Vec2> v)
{
  Matrix m(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = v[i].x;
    m(static_cast<Eigen::Index>(i), 1) = v[i].y;
  }
  return m;
}

/// Weighted CE over one kind's rows at one step; adds per-class values to `per_class`.
Var intent_term(const Var & logits, const model::SceneTensors & scene, const std::vector<int> & rows, int m,
                const std::vector<double> & weights, const std::vector<bool> & mask, double norm,
                std::span<double> per_class)
{
  std::vector<int> targets;
  std::vector<double> w;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int c = scene.gt_intents[static_cast<std::size_t>(rows[k])][m];
    const double wc = weights[static_cast<std::size_t>(c)];
    targets.push_back(wc > 0.0 ? c : 0);
    w.push_back(wc);
    if (wc > 0.0) {
      const Matrix & v = logits.value();
      const auto row = std::span<const double>(v.row(static_cast<Eigen::Index>(k)).data(), static_cast<std::size_t>(v.cols()));
      per_class[static_cast<std::size_t>(c)] += ad::softmax_cross_entropy(row, c, wc, mask).loss / norm;
    }
  }
  return ad::softmax_cross_entropy_sum(logits, targets, w, mask);
}

}  // namespace

SceneLoss compute_losses(ad::Tape & tape, const model::SceneTensors & scene, const model::GoalPosterior & post,
                         const model::Rollout & roll, const ClassWeights & weights, const TrainConfig & cfg,
                         const LossNorms & norms)
{
  if (norms.agents <= 0.0 || norms.traj_frames <= 0.0) throw NumericError("compute_losses: empty batch");
  if (static_cast<int>(roll.velocity.size()) != kFutFrames) {
    throw NumericError("compute_losses: rollout must cover " + std::to_string(kFutFrames) + " steps");
  }
  SceneLoss out;
  LossBreakdown & b = out.breakdown;

  const Var kl = ad::kl_diag_gaussian(post.mu, post.log_sigma);
  const Var rec = ad::sum_squares(post.goal_hat - tape.constant(vec2_rows(scene.gt_goals)));

  Var traj;
  for (int m = 0; m < kFutFrames; ++m) {
    std::vector<Vec2> gt;
    for (const auto & v : scene.gt_velocities) gt.push_back(v[m]);
    const Var err = ad::sum(ad::row_norm(roll.velocity[static_cast<std::size_t>(m)] - tape.constant(vec2_rows(gt))));
    traj = traj.valid() ? traj + err : err;
  }

  Var intent;
  if (norms.intent_frames > 0.0) {
    const auto veh_mask = model::intent_mask(AgentKind::kVehicle);
    const auto ped_mask = model::intent_mask(AgentKind::kPedestrian);
    for (int m = 0; m < kFutFrames; ++m) {
      const auto um = static_cast<std::size_t>(m);
      if (!scene.vehicle_rows.empty() && um < roll.vehicle_logits.size() && roll.vehicle_logits[um].valid()) {
        const Var t = intent_term(roll.vehicle_logits[um], scene, scene.vehicle_rows, m, weights.vehicle, veh_mask,
                                  norms.intent_frames, b.vehicle_class);
        intent = intent.valid() ? intent + t : t;
      }
      if (!scene.pedestrian_rows.empty() && um < roll.pedestrian_logits.size() && roll.pedestrian_logits[um].valid()) {
        const Var t = intent_term(roll.pedestrian_logits[um], scene, scene.pedestrian_rows, m, weights.pedestrian,
                                  ped_mask, norms.intent_frames, b.pedestrian_class);
        intent = intent.valid() ? intent + t : t;
      }
    }
  }

  b.kl = kl.scalar() / norms.agents;
  b.reconstruction = rec.scalar() / norms.agents;
  b.l_gpn = cfg.alpha1 * b.kl + cfg.alpha2 * b.reconstruction;
  b.l_traj = traj.scalar() / norms.traj_frames;
  b.l_int = intent.valid() ? intent.scalar() / norms.intent_frames : 0.0;
  b.l_final = cfg.lambda1 * b.l_gpn + cfg.lambda2 * b.l_int + cfg.lambda3 * b.l_traj;

  out.objective = ad::affine(kl, cfg.lambda1 * cfg.alpha1 / norms.agents) +
                  ad::affine(rec, cfg.lambda1 * cfg.alpha2 / norms.agents) +
                  ad::affine(traj, cfg.lambda3 / norms.traj_frames);
  if (intent.valid()) out.objective = out.objective + ad::affine(intent, cfg.lambda2 / norms.intent_frames);
  return out;
}

SceneLoss scene_forward(ad::Tape & tape, const model::Forecaster & model, const model::SceneTensors & scene,
                        const Matrix & eta, const ClassWeights & weights, const TrainConfig & cfg,
                        const LossNorms & norms)
{
  const Var enc = model.encode_observation(tape, scene.observations);
  const Var goals = tape.constant(vec2_rows(scene.gt_goals));
  const model::GoalPosterior post = model.goal_posterior(tape, enc, goals, eta);
  const model::Rollout roll = model.rollout(tape, scene, enc, goals);
  return compute_losses(tape, scene, post, roll, weights, cfg, norms);
}

bool is_rare(const model::SceneTensors & scene)
{
  for (std::uint8_t f : scene.future_flags) {
    if (f != 0) return true;
  }
  return false;
}

SceneSampler::SceneSampler(std::span<const model::SceneTensors> scenes, int augment, std::uint64_t seed)
: rng_(seed)
{
  if (scenes.empty()) throw UsageError("training sampler: no scenes");
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const int reps = is_rare(scenes[i]) ? augment : 1;
    for (int r = 0; r < reps; ++r) pool_.push_back(i);
  }
  reshuffle();
}

void SceneSampler::reshuffle()
{
  for (std::size_t i = pool_.size(); i > 1; --i) {
    std::swap(pool_[i - 1], pool_[uniform_index(rng_, i)]);
  }
  cursor_ = 0;
}

std::vector<std::size_t> SceneSampler::next_batch(int size)
{
  std::vector<std::size_t> out;
  for (int k = 0; k < size; ++k) {
    if (cursor_ == pool_.size()) reshuffle();
    out.push_back(pool_[cursor_++]);
  }
  return out;
}

TrainResult train(std::span<const model::SceneTensors> scenes, const TrainConfig & cfg, const TrainHooks & hooks)
{
  validate(cfg);
  if (scenes.empty()) throw UsageError("train: the training split has no scenes");
  TrainResult res;
  const model::Forecaster net = model::Forecaster::create(res.store, derive_seed(cfg.seed, 1), cfg.model);
  res.weights = corpus_class_weights(scenes);
  SceneSampler sampler(scenes, cfg.augment, derive_seed(cfg.seed, 2));
  std::mt19937_64 noise(derive_seed(cfg.seed, 3));
  ad::AdamConfig adam;
  adam.lr = cfg.lr;

  for (int step = 0; step < cfg.max_steps; ++step) {
    const std::vector<std::size_t> idx = sampler.next_batch(cfg.batch);
    std::vector<const model::SceneTensors *> batch;
    for (std::size_t i : idx) batch.push_back(&scenes[i]);
    const LossNorms norms = loss_norms(batch, res.weights);

    ad::GradBuffer grads(res.store);
    LossBreakdown total;
    try {
      for (const auto * scene : batch) {
        Matrix eta(scene->agent_count(), model::kLatent);
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = standard_normal(noise);
        ad::Tape tape(&res.store);
        const SceneLoss sl = scene_forward(tape, net, *scene, eta, res.weights, cfg, norms);
        tape.backward(sl.objective);
        tape.accumulate_param_grads(grads);
        total += sl.breakdown;
      }
      if (!std::isfinite(total.l_final)) throw NumericError("non-finite loss");
      res.log.push_back(total);
      if (hooks.on_step) hooks.on_step(step, total);
      if (cfg.clip_norm > 0.0) ad::clip_global_norm(grads, cfg.clip_norm);
      ad::adam_step(res.store, grads, adam);
    } catch (const NumericError & e) {
      if (!hooks.failure_checkpoint.empty()) {
        ad::save_checkpoint(res.store, checkpoint_metadata(cfg), hooks.failure_checkpoint);
      }
      throw NumericError("training aborted at step " + std::to_string(step) + ": " + e.what());
    }
  }
  return res;
}

std::string format_loss_log(std::span<const LossBreakdown> log)
{
  std::string out = "step,l_gpn,l_int,l_traj,l_final\n";
  char buf[256];
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f\n", i, log[i].l_gpn, log[i].l_int, log[i].l_traj,
                  log[i].l_final);
    out += buf;
  }
  return out;
}

std::string checkpoint_metadata(const TrainConfig & cfg)
{
  nlohmann::ordered_json j;
  j["format"] = "jointcast-model";
  j["version"] = 1;
  j["attention_scale"] = cfg.model.scale == graph::AttentionScale::kDimension ? "dimension" : "degree";
  j["train"] = {{"lambda1", cfg.lambda1}, {"lambda2", cfg.lambda2}, {"lambda3", cfg.lambda3},
                {"alpha1", cfg.alpha1},   {"alpha2", cfg.alpha2},   {"lr", cfg.lr},
                {"batch", cfg.batch},     {"max_steps", cfg.max_steps}, {"seed", cfg.seed},
                {"augment", cfg.augment}, {"clip_norm", cfg.clip_norm}};
  return j.dump();
}

model::ModelConfig model_config_from_metadata(const std::string & metadata)
{
  model::ModelConfig m;
  const auto j = nlohmann::json::parse(metadata, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || j.value("format", "") != "jointcast-model") {
    throw SchemaError("checkpoint metadata is not a jointcast model description");
  }
  const std::string scale = j.value("attention_scale", "dimension");
  if (scale == "degree") {
    m.scale = graph::AttentionScale::kDegree;
  } else if (scale != "dimension") {
    throw SchemaError("checkpoint metadata: unknown attention_scale '" + scale + "'");
  }
  return m;
}

}  // namespace jointcast::train
