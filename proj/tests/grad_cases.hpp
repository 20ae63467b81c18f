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

#ifndef JOINTCAST_TESTS_GRAD_CASES_HPP_
#define JOINTCAST_TESTS_GRAD_CASES_HPP_

#include "jointcast/ad/grad_check.hpp"
#include "jointcast/ad/layers.hpp"
#include "jointcast/ad/tape.hpp"
#include "jointcast/forecaster.hpp"
#include "jointcast/random.hpp"
#include "jointcast/scene_graph.hpp"
#include "jointcast/synthgen.hpp"
#include "jointcast/training.hpp"

#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

// Gradient-check fixtures shared by the unit and acceptance suites. Each case fills a fresh
// store with a random point and returns the scalar function to differentiate.
namespace jointcast::testing
{

using ad::Matrix;
using ad::ParamStore;
using ad::Tape;
using ad::Var;

struct GradCase
{
  std::string name;
  double tolerance = 1e-4;  // on the max relative error
  std::function<ad::ScalarFn(ParamStore &, std::mt19937_64 &)> setup;
};

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 & rng, double lo = -1.0,
                            double hi = 1.0)
{
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
  return m;
}

/// Contracts an output with fixed random weights so every entry reaches the scalar.
inline Var project(Tape & tape, const Var & y, const Matrix & r)
{
  return ad::sum(ad::hadamard(y, tape.constant(r)));
}

inline std::vector<GradCase> op_grad_cases()
{
  std::vector<GradCase> cases;

  cases.push_back({"linear", 1e-6, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("x", random_matrix(3, 5, rng));
                     s.add("w", random_matrix(5, 4, rng));
                     s.add("b", random_matrix(1, 4, rng));
                     const Matrix r = random_matrix(3, 4, rng);
                     return [r](Tape & t) { return project(t, ad::linear(t.param("x"), t.param("w"), t.param("b")), r); };
                   }});

  cases.push_back({"mlp_93_80_40_2", 1e-6, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("x", random_matrix(2, 93, rng));
                     const ad::Mlp mlp = ad::Mlp::create(
                       s, "mlp",
                       {{93, 80, ad::Activation::kRelu}, {80, 40, ad::Activation::kRelu}, {40, 2, ad::Activation::kNone}},
                       rng);
                     const Matrix r = random_matrix(2, 2, rng);
                     return [mlp, r](Tape & t) { return project(t, ad::mlp_apply(t, mlp, t.param("x")), r); };
                   }});

  cases.push_back({"gru_cell", 1e-6, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("x", random_matrix(3, 6, rng));
                     s.add("h", random_matrix(3, 5, rng));
                     const ad::GruCell cell = ad::GruCell::create(s, "gru", 6, 5, rng);
                     const Matrix r = random_matrix(3, 5, rng);
                     return [cell, r](Tape & t) { return project(t, ad::gru_cell_step(t, cell, t.param("x"), t.param("h")), r); };
                   }});

  cases.push_back({"masked_softmax", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("logits", random_matrix(4, 8, rng, -3.0, 3.0));
                     const Matrix r = random_matrix(4, 8, rng);
                     return [r](Tape & t) {
                       return project(t, ad::masked_softmax(t.param("logits"), model::intent_mask(AgentKind::kVehicle)), r);
                     };
                   }});

  cases.push_back({"softmax_cross_entropy", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("logits", random_matrix(6, 5, rng, -3.0, 3.0));
                     std::vector<int> targets;
                     std::vector<double> weights;
                     for (int i = 0; i < 6; ++i) {
                       targets.push_back(static_cast<int>(uniform_index(rng, 4)));
                       weights.push_back(uniform(rng, 0.1, 3.0));
                     }
                     return [targets, weights](Tape & t) {
                       return ad::softmax_cross_entropy_sum(t.param("logits"), targets, weights,
                                                            model::intent_mask(AgentKind::kPedestrian));
                     };
                   }});

  cases.push_back({"kl_diag_gaussian", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("mu", random_matrix(3, 16, rng, -2.0, 2.0));
                     s.add("log_sigma", random_matrix(3, 16, rng));
                     return [](Tape & t) { return ad::kl_diag_gaussian(t.param("mu"), t.param("log_sigma")); };
                   }});

  cases.push_back({"segment_softmax", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("scores", random_matrix(7, 1, rng, -3.0, 3.0));
                     const Matrix r = random_matrix(7, 1, rng);
                     return [r](Tape & t) {
                       const std::vector<int> seg = {0, 0, 1, 1, 1, 2, 2};
                       return project(t, ad::segment_softmax(t.param("scores"), seg, 3), r);
                     };
                   }});

  cases.push_back({"row_ops", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                     s.add("a", random_matrix(4, 3, rng));
                     s.add("b", random_matrix(4, 3, rng));
                     const Matrix r = random_matrix(5, 8, rng);
                     const Matrix m = random_matrix(3, 2, rng);
                     return [r, m](Tape & t) {
                       const Var a = t.param("a");
                       const Var b = t.param("b");
                       const std::vector<int> rows = {2, 0, 3, 3, 1};
                       const Var g = ad::gather_rows(ad::sigmoid(a), rows);
                       const Var n = ad::row_norm(ad::sub(a, b));
                       const Var d = ad::row_dot(ad::tanh(a), ad::exp(b));
                       const Var sc = ad::scale_rows(ad::hadamard(a, b), ad::add(n, d));
                       const Var back = ad::scatter_add_rows(sc, std::vector<int>{1, 2, 4, 0}, 5);
                       const std::vector<Var> parts = {g, ad::slice_cols(back, 1, 2), ad::relu(ad::affine(back, 0.5, 0.1))};
                       return project(t, ad::concat_cols(parts), r) + ad::sum_squares(ad::matmul(a, t.constant(m)));
                     };
                   }});

  for (auto scale : {graph::AttentionScale::kDimension, graph::AttentionScale::kDegree}) {
    cases.push_back({scale == graph::AttentionScale::kDimension ? "message_passing_sqrt_d" : "message_passing_sqrt_degree", 1e-4,
                     [scale](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
                       const int n = 5;
                       s.add("pos", random_matrix(n, 2, rng, -18.0, 18.0));
                       s.add("vel", random_matrix(n, 2, rng, -2.0, 2.0));
                       s.add("hidden", random_matrix(n, graph::kHiddenWidth, rng));
                       const graph::MessagePassing mp = graph::MessagePassing::create(s, rng, scale);
                       std::vector<RoadPoint> roads = {{{30.0, 0.0}, RoadRole::kEntrance}, {{-25.0, 5.0}, RoadRole::kExit}};
                       const Matrix r = random_matrix(n, graph::kHiddenWidth, rng);
                       return [mp, roads, r, n](Tape & t) {
                         const Var pos = t.param("pos");
                         const Var vel = t.param("vel");
                         std::vector<Vec2> p(n), v(n);
                         for (int i = 0; i < n; ++i) {
                           p[i] = {pos.value()(i, 0), pos.value()(i, 1)};
                           v[i] = {vel.value()(i, 0), vel.value()(i, 1)};
                         }
                         const graph::SceneGraph g = graph::build_scene_graph(p, v, Matrix(), roads);
                         const Var ef = graph::edge_feature_var(t, g, pos, vel);
                         return project(t, mp.apply(t, g, t.param("hidden"), ef).hidden, r);
                       };
                     }});
  }
  return cases;
}

/// A 3-agent scene (two vehicles, one pedestrian) from the synthetic generator.
inline model::SceneTensors three_agent_scene(std::uint64_t seed)
{
  synth::GenConfig cfg;
  cfg.seed = seed;
  cfg.n_scenarios = 1;
  cfg.n_vehicles = 2;
  cfg.n_pedestrians = 1;
  cfg.turn_prob = 0.5;
  const Scenario s = synth::generate_corpus(cfg).front();
  for (const SceneSample & sc : build_scenes(s)) {
    if (sc.windows.size() == 3) return model::prepare_scene(sc);
  }
  return model::prepare_scene(build_scenes(s).front());
}

/// Full training objective of one scene at a random initialisation.
inline GradCase end_to_end_case()
{
  return {"end_to_end_loss", 1e-4, [](ParamStore & s, std::mt19937_64 & rng) -> ad::ScalarFn {
            const std::uint64_t seed = rng();
            const model::Forecaster net = model::Forecaster::create(s, seed);
            auto scene = std::make_shared<model::SceneTensors>(three_agent_scene(seed % 7));
            const train::ClassWeights weights = train::corpus_class_weights(std::span(scene.get(), 1));
            const model::SceneTensors * batch[] = {scene.get()};
            const train::LossNorms norms = train::loss_norms(batch, weights);
            Matrix eta(scene->agent_count(), model::kLatent);
            for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = standard_normal(rng);
            train::TrainConfig cfg;
            return [net, scene, weights, norms, eta, cfg](Tape & t) {
              return train::scene_forward(t, net, *scene, eta, weights, cfg, norms).objective;
            };
          }};
}

/// The analytic gradient agrees with central differences everywhere the difference
/// can resolve it, and stays within a few round-off units elsewhere.
inline bool exact_to_roundoff(const ad::GradCheckReport & r, double tol = 1e-4)
{
  return r.checked > 0 && r.max_rel_error_resolved < tol && r.max_noise_ratio_unresolved < 4.0;
}

inline std::string describe(const ad::GradCheckReport & r)
{
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "max rel %.3e at %s[%zu] (analytic %.6e numeric %.6e); resolved %.3e; %zu of %zu below "
                "resolution (floor %.2e, worst %.2f floors); %zu kinks skipped",
                r.max_rel_error, r.worst_param.c_str(), r.worst_index, r.worst_analytic, r.worst_numeric,
                r.max_rel_error_resolved, r.unresolved, r.checked, r.noise_floor, r.max_noise_ratio_unresolved,
                r.skipped_kinks);
  return buf;
}

}  // namespace jointcast::testing

#endif  // JOINTCAST_TESTS_GRAD_CASES_HPP_
