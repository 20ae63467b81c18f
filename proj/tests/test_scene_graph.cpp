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
#include "graph_oracle.hpp"
#include "jointcast/error.hpp"
#include "jointcast/scene_graph.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace jointcast::graph
{
namespace
{

using ad::Matrix;
using testing::random_matrix;

SceneGraph two_agents(double distance)
{
  const std::vector<Vec2> p = {{0.0, 0.0}, {distance, 0.0}};
  const std::vector<Vec2> v = {{1.0, 0.0}, {0.0, 0.0}};
  return build_scene_graph(p, v, Matrix::Zero(2, kHiddenWidth), {});
}

TEST(BuildGraph, CloseAgentsLinkBothWays)
{
  const SceneGraph g = two_agents(10.0);
  EXPECT_EQ(testing::edge_set(g), (std::set<std::pair<int, int>>{{0, 1}, {1, 0}}));
}

TEST(BuildGraph, DistantAgentsStayApart)
{
  EXPECT_TRUE(two_agents(25.0).edges.empty());
}

TEST(BuildGraph, ThresholdIsInclusive)
{
  EXPECT_EQ(two_agents(20.0).edges.size(), 2u);
  EXPECT_TRUE(two_agents(std::nextafter(20.0, 21.0)).edges.empty());
}

TEST(BuildGraph, RoadPointOnlySendsEdges)
{
  const std::vector<Vec2> p = {{0.0, 0.0}};
  const std::vector<Vec2> v = {{0.0, 0.0}};
  const std::vector<RoadPoint> roads = {{{30.0, 0.0}, RoadRole::kExit}, {{0.0, 35.0}, RoadRole::kEntrance},
                                        {{0.0, -36.0}, RoadRole::kEntrance}};
  const SceneGraph g = build_scene_graph(p, v, Matrix::Zero(1, kHiddenWidth), roads);
  EXPECT_EQ(testing::edge_set(g), (std::set<std::pair<int, int>>{{1, 0}, {2, 0}}));
  for (const Edge & e : g.edges) EXPECT_LT(e.dst, g.agent_count());
}

TEST(BuildGraph, MatchesBruteForceOnRandomScenes)
{
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const testing::RandomScene s = testing::random_scene(rng);
    const SceneGraph g = build_scene_graph(s.positions, s.velocities, Matrix(), s.roads);
    EXPECT_EQ(testing::edge_set(g), testing::brute_force_edges(s)) << "trial " << trial;
    EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end(), [](const Edge & a, const Edge & b) {
      return std::pair(a.dst, a.src) < std::pair(b.dst, b.src);
    }));
    for (const Edge & e : g.edges) {
      EXPECT_EQ(e.features, compute_edge_features(g.node(e.src), g.node(e.dst)));
    }
  }
}

TEST(EdgeFeatures, Examples)
{
  EXPECT_EQ(compute_edge_features({{1.0, 2.0}, {}}, {{1.0, 2.0}, {}}), EdgeFeatures{});
  EXPECT_EQ(compute_edge_features({{3.0, 4.0}, {}}, {{0.0, 0.0}, {}}), (EdgeFeatures{0, 0, 0, 0, 3, 4, 0, 0}));
}

TEST(EdgeFeatures, SwapIsAntisymmetric)
{
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const NodeState a{{uniform(rng, -9, 9), uniform(rng, -9, 9)}, {uniform(rng, -2, 2), uniform(rng, -2, 2)}};
    const NodeState b{{uniform(rng, -9, 9), uniform(rng, -9, 9)}, {uniform(rng, -2, 2), uniform(rng, -2, 2)}};
    const EdgeFeatures ab = compute_edge_features(a, b);
    const EdgeFeatures ba = compute_edge_features(b, a);
    for (int k = 0; k < 2; ++k) {
      EXPECT_EQ(ab[k], ba[2 + k]);
      EXPECT_EQ(ab[2 + k], ba[k]);
    }
    for (int k = 4; k < 8; ++k) EXPECT_EQ(ab[k], -ba[k]);
  }
}

TEST(EdgeFeatures, TapeVersionMatchesGraph)
{
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const testing::RandomScene s = testing::random_scene(rng);
    const SceneGraph g = build_scene_graph(s.positions, s.velocities, Matrix(), s.roads);
    ad::ParamStore store;
    ad::Tape tape(&store, false);
    Matrix p(g.agent_count(), 2), v(g.agent_count(), 2);
    for (int i = 0; i < g.agent_count(); ++i) {
      p.row(i) << s.positions[i].x, s.positions[i].y;
      v.row(i) << s.velocities[i].x, s.velocities[i].y;
    }
    const Matrix a = edge_feature_var(tape, g, tape.constant(p), tape.constant(v)).value();
    const Matrix b = edge_feature_const(tape, g).value();
    EXPECT_TRUE(a.isApprox(b, 1e-14) || (a.size() == 0 && b.size() == 0));
  }
}

class MessagePassTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    std::mt19937_64 rng(31);
    mp = MessagePassing::create(store, rng);
  }

  Matrix gamma(const Matrix & x) const
  {
    return (x * store.value(store.id("transformer_conv.gamma.weight"))).rowwise() +
           store.value(store.id("transformer_conv.gamma.bias")).row(0);
  }

  ad::ParamStore store;
  MessagePassing mp;
};

TEST_F(MessagePassTest, IsolatedNodeReturnsGamma)
{
  std::mt19937_64 rng(1);
  const std::vector<Vec2> p = {{0.0, 0.0}, {100.0, 0.0}};
  const std::vector<Vec2> v(2);
  const Matrix h = random_matrix(2, kHiddenWidth, rng);
  store.value(store.id("transformer_conv.gamma.bias")) = random_matrix(1, kHiddenWidth, rng);
  const SceneGraph g = build_scene_graph(p, v, h, {});
  EXPECT_TRUE(message_pass(g, store, mp).isApprox(gamma(h), 1e-14));
}

TEST_F(MessagePassTest, SingleNeighbourGetsFullAttention)
{
  std::mt19937_64 rng(2);
  const std::vector<Vec2> p = {{0.0, 0.0}};
  const std::vector<Vec2> v(1);
  const SceneGraph g = build_scene_graph(p, v, random_matrix(1, kHiddenWidth, rng), std::vector<RoadPoint>{{{5.0, 5.0}, RoadRole::kEntrance}});
  std::vector<double> att;
  message_pass(g, store, mp, &att);
  ASSERT_EQ(att.size(), 1u);
  EXPECT_EQ(att[0], 1.0);
}

TEST_F(MessagePassTest, IdenticalNeighboursShareAttention)
{
  std::mt19937_64 rng(3);
  // Two road points of the same role at mirrored offsets with a stationary receiver: identical keys
  // only if the relative positions match, so place them at the same point.
  const std::vector<Vec2> p = {{0.0, 0.0}};
  const std::vector<Vec2> v(1);
  const std::vector<RoadPoint> roads = {{{4.0, 3.0}, RoadRole::kExit}, {{4.0, 3.0}, RoadRole::kExit}};
  const SceneGraph g = build_scene_graph(p, v, random_matrix(1, kHiddenWidth, rng), roads);
  std::vector<double> att;
  message_pass(g, store, mp, &att);
  ASSERT_EQ(att.size(), 2u);
  EXPECT_EQ(att[0], 0.5);
  EXPECT_EQ(att[1], 0.5);
}

TEST_F(MessagePassTest, AttentionRowsSumToOne)
{
  std::mt19937_64 rng(4);
  for (auto scale : {AttentionScale::kDimension, AttentionScale::kDegree}) {
    mp.set_scale(scale);
    for (int trial = 0; trial < 50; ++trial) {
      const testing::RandomScene s = testing::random_scene(rng);
      const int n = static_cast<int>(s.positions.size());
      const SceneGraph g = build_scene_graph(s.positions, s.velocities, random_matrix(n, kHiddenWidth, rng), s.roads);
      std::vector<double> att;
      message_pass(g, store, mp, &att);
      std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
      for (std::size_t e = 0; e < g.edges.size(); ++e) sums[static_cast<std::size_t>(g.edges[e].dst)] += att[e];
      for (int i = 0; i < n; ++i) {
        if (g.in_degree(i) > 0) {
          EXPECT_NEAR(sums[static_cast<std::size_t>(i)], 1.0, 1e-12);
        }
      }
    }
  }
}

TEST_F(MessagePassTest, PermutationEquivariant)
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const testing::RandomScene s = testing::random_scene(rng);
    const int n = static_cast<int>(s.positions.size());
    const Matrix h = random_matrix(n, kHiddenWidth, rng);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec2> pp, pv;
    Matrix ph(n, kHiddenWidth);
    for (int i = 0; i < n; ++i) {
      pp.push_back(s.positions[perm[i]]);
      pv.push_back(s.velocities[perm[i]]);
      ph.row(i) = h.row(perm[i]);
    }
    const Matrix out = message_pass(build_scene_graph(s.positions, s.velocities, h, s.roads), store, mp);
    const Matrix pout = message_pass(build_scene_graph(pp, pv, ph, s.roads), store, mp);
    for (int i = 0; i < n; ++i) {
      EXPECT_TRUE(pout.row(i).isApprox(out.row(perm[i]), 1e-12)) << "trial " << trial;
    }
  }
}

TEST_F(MessagePassTest, MatchesExplicitFormula)
{
  std::mt19937_64 rng(6);
  const testing::RandomScene s = testing::random_scene(rng);
  const int n = static_cast<int>(s.positions.size());
  const Matrix h = random_matrix(n, kHiddenWidth, rng);
  for (std::size_t p = 0; p < store.size(); ++p) {
    if (store.name(ad::ParamId{p}).find("bias") != std::string::npos) {
      store.value(ad::ParamId{p}) = random_matrix(1, store.value(ad::ParamId{p}).cols(), rng);
    }
  }
  const SceneGraph g = build_scene_graph(s.positions, s.velocities, h, s.roads);
  const Matrix out = message_pass(g, store, mp);

  // Reference with plain Eigen loops.
  auto w = [&](const char * name) { return store.value(store.id(name)); };
  auto embed = [&](const EdgeFeatures & f) {
    Eigen::RowVectorXd x(kEdgeFeatureWidth);
    for (int k = 0; k < kEdgeFeatureWidth; ++k) x(k) = f[static_cast<std::size_t>(k)];
    Eigen::RowVectorXd a = (x * w("edge_attr.linear_1.weight") + w("edge_attr.linear_1.bias")).cwiseMax(0.0);
    return Eigen::RowVectorXd(a * w("edge_attr.linear_2.weight") + w("edge_attr.linear_2.bias"));
  };
  auto node = [&](int j) -> Eigen::RowVectorXd {
    if (j < n) return h.row(j);
    return g.roads[static_cast<std::size_t>(j - n)].role == RoadRole::kEntrance ? w("road_embedding.entrance")
                                                                                 : w("road_embedding.exit");
  };
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd expected = h.row(i) * w("transformer_conv.gamma.weight") + w("transformer_conv.gamma.bias");
    const Eigen::RowVectorXd q = h.row(i) * w("transformer_conv.psi.weight") + w("transformer_conv.psi.bias");
    std::vector<double> score;
    std::vector<Eigen::RowVectorXd> values;
    for (const Edge & e : g.edges) {
      if (e.dst != i) continue;
      const Eigen::RowVectorXd emb = embed(e.features);
      const Eigen::RowVectorXd k = node(e.src) * w("transformer_conv.xi.node_weight") + emb * w("transformer_conv.xi.edge_weight");
      values.push_back(node(e.src) * w("transformer_conv.phi.node_weight") + emb * w("transformer_conv.phi.edge_weight") +
                       w("transformer_conv.phi.bias"));
      score.push_back(q.dot(k) / std::sqrt(80.0));
    }
    if (!score.empty()) {
      const double top = *std::max_element(score.begin(), score.end());
      double z = 0.0;
      for (double & sc : score) z += (sc = std::exp(sc - top));
      for (std::size_t k = 0; k < score.size(); ++k) expected += (score[k] / z) * values[k];
    }
    EXPECT_TRUE(out.row(i).isApprox(expected, 1e-10)) << i;
  }
}

TEST_F(MessagePassTest, WrongHiddenWidthThrows)
{
  const std::vector<Vec2> p = {{0.0, 0.0}};
  const std::vector<Vec2> v(1);
  EXPECT_THROW(message_pass(build_scene_graph(p, v, Matrix::Zero(1, 79), {}), store, mp), Error);
}

TEST_F(MessagePassTest, EdgeDumpHasOneRowPerEdge)
{
  const SceneGraph g = two_agents(5.0);
  std::vector<double> att;
  message_pass(g, store, mp, &att);
  const std::string dump = format_edge_dump(g, att);
  EXPECT_EQ(std::count(dump.begin(), dump.end(), '\n'), 3);
  EXPECT_EQ(dump.rfind("src\tdst\t", 0), 0u);
  EXPECT_NE(dump.find("1\t0\tagent\t1.000000"), std::string::npos) << dump;
}

TEST(MessagePassGrad, PassesGradCheck)
{
  for (const auto & c : testing::op_grad_cases()) {
    if (c.name.rfind("message_passing", 0) != 0) continue;
    ad::ParamStore store;
    std::mt19937_64 rng(41);
    const ad::ScalarFn fn = c.setup(store, rng);
    ad::GradCheckOptions opts;
    opts.max_coords_per_param = 25;
    EXPECT_LT(ad::grad_check(store, fn, opts).max_rel_error, 1e-4) << c.name;
  }
}

}  // namespace
}  // namespace jointcast::graph
