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

#ifndef JOINTCAST_SCENE_GRAPH_HPP_
#define JOINTCAST_SCENE_GRAPH_HPP_

#include "jointcast/ad/layers.hpp"
#include "jointcast/ad/tape.hpp"
#include "jointcast/scenario.hpp"

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jointcast::graph
{

inline constexpr double kAgentRadius = 20.0;  // agent <-> agent, inclusive
inline constexpr double kRoadRadius = 35.0;   // road -> agent, inclusive
inline constexpr int kHiddenWidth = 80;
inline constexpr int kEdgeFeatureWidth = 8;
inline constexpr int kEdgeEmbedWidth = 16;

using EdgeFeatures = std::array<double, kEdgeFeatureWidth>;

struct NodeState
{
  Vec2 position;
  Vec2 velocity;  // zero for road nodes
};

/// [v_src, v_dst, p_src - p_dst, v_src - v_dst]
EdgeFeatures compute_edge_features(const NodeState & src, const NodeState & dst);

struct Edge
{
  int src = 0;  // node index: agents are [0, n), road points are [n, n + r)
  int dst = 0;  // always an agent
  EdgeFeatures features{};
};

/// Directed scene graph for one timestep. Edges are sorted by (dst, src).
struct SceneGraph
{
  std::vector<NodeState> agents;
  std::vector<RoadPoint> roads;
  std::vector<Edge> edges;
  ad::Matrix agent_hidden;  // n x kHiddenWidth; may be empty when hidden states live on a tape

  int agent_count() const { return static_cast<int>(agents.size()); }
  int node_count() const { return static_cast<int>(agents.size() + roads.size()); }
  NodeState node(int index) const;
  std::size_t in_degree(int agent) const;
};

SceneGraph build_scene_graph(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                             const ad::Matrix & hiddens, std::span<const RoadPoint> road_points);

enum class AttentionScale : std::uint8_t {
  kDimension,  // sqrt(key width)
  kDegree,     // sqrt(in-degree of the receiving node)
};

struct MessagePassResult
{
  ad::Var hidden;     // n x 80
  ad::Var attention;  // E x 1, aligned with graph.edges; invalid when E = 0
};

/// One round of single-head scaled dot-product attention over the scene graph:
///   x_i' = gamma(x_i) + sum_j a_ij * phi(x_j, e_ij),
///   a_ij = softmax_j(psi(x_i) . xi(x_j, e_ij) / sqrt(d)),
/// with raw edge features embedded by a two-layer map (8 -> 16 -> 16) first.
/// Road nodes carry one of two learned embeddings (Entrance, Exit) and receive no messages.
class MessagePassing
{
public:
  MessagePassing() = default;
  static MessagePassing create(ad::ParamStore & store, std::mt19937_64 & rng,
                               AttentionScale scale = AttentionScale::kDimension);
  static MessagePassing bind(const ad::ParamStore & store,
                             AttentionScale scale = AttentionScale::kDimension);

  /// `edge_features` is E x 8, rows aligned with graph.edges (see edge_feature_var).
  MessagePassResult apply(ad::Tape & tape, const SceneGraph & graph, const ad::Var & agent_hidden,
                          const ad::Var & edge_features) const;

  AttentionScale scale() const { return scale_; }
  void set_scale(AttentionScale s) { scale_ = s; }

private:
  AttentionScale scale_ = AttentionScale::kDimension;
  ad::Mlp edge_attr_;
  ad::ParamId gamma_w_, gamma_b_, psi_w_, psi_b_;
  ad::ParamId xi_node_, xi_edge_;
  ad::ParamId phi_node_, phi_edge_, phi_b_;
  ad::ParamId road_entrance_, road_exit_;
};

/// Edge features as a differentiable function of agent positions/velocities (n x 2 each);
/// road nodes contribute constant positions and zero velocity.
ad::Var edge_feature_var(ad::Tape & tape, const SceneGraph & graph, const ad::Var & positions,
                         const ad::Var & velocities);

/// Edge features taken from graph.edges as a constant E x 8 node.
ad::Var edge_feature_const(ad::Tape & tape, const SceneGraph & graph);

/// Plain-value message passing on graph.agent_hidden. Returns updated n x 80 hidden states.
ad::Matrix message_pass(const SceneGraph & graph, const ad::ParamStore & store,
                        const MessagePassing & mp, std::vector<double> * attention = nullptr);

/// Tab-separated debug dump: one row per edge with endpoints, attention and raw features.
std::string format_edge_dump(const SceneGraph & graph, std::span<const double> attention);

}  // namespace jointcast::graph

#endif  // JOINTCAST_SCENE_GRAPH_HPP_
