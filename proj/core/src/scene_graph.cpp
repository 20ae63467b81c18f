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

#include "jointcast/scene_graph.hpp"

#include "jointcast/error.hpp"

#include <cmath>
#include <cstdio>

namespace jointcast::graph
{

EdgeFeatures compute_edge_features(const NodeState & src, const NodeState & dst)
{
  return {src.velocity.x,
          src.velocity.y,
          dst.velocity.x,
          dst.velocity.y,
          src.position.x - dst.position.x,
          src.position.y - dst.position.y,
          src.velocity.x - dst.velocity.x,
          src.velocity.y - dst.velocity.y};
}

NodeState SceneGraph::node(int index) const
{
  if (index < agent_count()) return agents[static_cast<std::size_t>(index)];
  return {roads[static_cast<std::size_t>(index - agent_count())].position, {}};
}

std::size_t SceneGraph::in_degree(int agent) const
{
  std::size_t d = 0;
  for (const auto & e : edges) d += e.dst == agent ? 1 : 0;
  return d;
}

SceneGraph build_scene_graph(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                             const ad::Matrix & hiddens, std::span<const RoadPoint> road_points)
{
  if (positions.size() != velocities.size()) {
    throw NumericError("build_scene_graph: positions and velocities differ in length");
  }
  SceneGraph g;
  g.agent_hidden = hiddens;
  for (std::size_t i = 0; i < positions.size(); ++i) g.agents.push_back({positions[i], velocities[i]});
  g.roads.assign(road_points.begin(), road_points.end());
  const int n = g.agent_count();
  for (int dst = 0; dst < n; ++dst) {
    const NodeState d = g.agents[static_cast<std::size_t>(dst)];
    for (int src = 0; src < g.node_count(); ++src) {
      if (src == dst) continue;
      const NodeState s = g.node(src);
      const double limit = src < n ? kAgentRadius : kRoadRadius;
      if ((s.position - d.position).norm() <= limit) {
        g.edges.push_back({src, dst, compute_edge_features(s, d)});
      }
    }
  }
  return g;
}

MessagePassing MessagePassing::create(ad::ParamStore & store, std::mt19937_64 & rng, AttentionScale scale)
{
  using ad::Activation;
  using ad::init_weight;
  constexpr int H = kHiddenWidth;
  constexpr int E = kEdgeEmbedWidth;
  MessagePassing mp;
  mp.scale_ = scale;
  mp.edge_attr_ = ad::Mlp::create(store, "edge_attr",
                                  {{kEdgeFeatureWidth, E, Activation::kRelu}, {E, E, Activation::kNone}}, rng);
  mp.gamma_w_ = store.add("transformer_conv.gamma.weight", init_weight(H, H, rng));
  mp.gamma_b_ = store.add("transformer_conv.gamma.bias", ad::Matrix::Zero(1, H));
  mp.psi_w_ = store.add("transformer_conv.psi.weight", init_weight(H, H, rng));
  mp.psi_b_ = store.add("transformer_conv.psi.bias", ad::Matrix::Zero(1, H));
  // xi and phi act on concat(x_j, e_ij); the weight is stored split by input block.
  ad::Matrix xi = init_weight(H + E, H, rng);
  mp.xi_node_ = store.add("transformer_conv.xi.node_weight", xi.topRows(H));
  mp.xi_edge_ = store.add("transformer_conv.xi.edge_weight", xi.bottomRows(E));
  ad::Matrix phi = init_weight(H + E, H, rng);
  mp.phi_node_ = store.add("transformer_conv.phi.node_weight", phi.topRows(H));
  mp.phi_edge_ = store.add("transformer_conv.phi.edge_weight", phi.bottomRows(E));
  mp.phi_b_ = store.add("transformer_conv.phi.bias", ad::Matrix::Zero(1, H));
  mp.road_entrance_ = store.add("road_embedding.entrance", init_weight(H, 1, rng).transpose());
  mp.road_exit_ = store.add("road_embedding.exit", init_weight(H, 1, rng).transpose());
  return mp;
}

MessagePassing MessagePassing::bind(const ad::ParamStore & store, AttentionScale scale)
{
  using ad::Activation;
  constexpr int E = kEdgeEmbedWidth;
  MessagePassing mp;
  mp.scale_ = scale;
  mp.edge_attr_ = ad::Mlp::bind(store, "edge_attr",
                                {{kEdgeFeatureWidth, E, Activation::kRelu}, {E, E, Activation::kNone}});
  mp.gamma_w_ = store.id("transformer_conv.gamma.weight");
  mp.gamma_b_ = store.id("transformer_conv.gamma.bias");
  mp.psi_w_ = store.id("transformer_conv.psi.weight");
  mp.psi_b_ = store.id("transformer_conv.psi.bias");
  mp.xi_node_ = store.id("transformer_conv.xi.node_weight");
  mp.xi_edge_ = store.id("transformer_conv.xi.edge_weight");
  mp.phi_node_ = store.id("transformer_conv.phi.node_weight");
  mp.phi_edge_ = store.id("transformer_conv.phi.edge_weight");
  mp.phi_b_ = store.id("transformer_conv.phi.bias");
  mp.road_entrance_ = store.id("road_embedding.entrance");
  mp.road_exit_ = store.id("road_embedding.exit");
  return mp;
}

MessagePassResult MessagePassing::apply(ad::Tape & tape, const SceneGraph & graph,
                                        const ad::Var & agent_hidden, const ad::Var & edge_features) const
{
  const int n = graph.agent_count();
  if (agent_hidden.rows() != n || agent_hidden.cols() != kHiddenWidth) {
    throw NumericError("message_pass: hidden states must be " + std::to_string(n) + " x 80");
  }
  const Eigen::Index edge_count = static_cast<Eigen::Index>(graph.edges.size());
  if (tape.track_kinks()) {
    std::uint64_t h = 0x51ed27;
    for (const auto & e : graph.edges) h = h * 1000003ULL + static_cast<std::uint64_t>(e.src * 7919 + e.dst);
    tape.mix_kink(h);
  }

  MessagePassResult out;
  const ad::Var gamma = ad::linear(agent_hidden, tape.param(gamma_w_), tape.param(gamma_b_));
  if (edge_count == 0) {
    out.hidden = gamma;
    return out;
  }
  if (edge_features.rows() != edge_count || edge_features.cols() != kEdgeFeatureWidth) {
    throw NumericError("message_pass: edge features must be E x 8");
  }

  ad::Var nodes = agent_hidden;
  if (!graph.roads.empty()) {
    const ad::Var table[] = {tape.param(road_entrance_), tape.param(road_exit_)};
    std::vector<int> roles;
    for (const auto & r : graph.roads) roles.push_back(r.role == RoadRole::kEntrance ? 0 : 1);
    const ad::Var road_rows = ad::gather_rows(ad::concat_rows(table), roles);
    const ad::Var parts[] = {agent_hidden, road_rows};
    nodes = ad::concat_rows(parts);
  }

  std::vector<int> src;
  std::vector<int> dst;
  for (const auto & e : graph.edges) {
    src.push_back(e.src);
    dst.push_back(e.dst);
  }

  const ad::Var edge_embed = edge_attr_.apply(tape, edge_features);
  const ad::Var query = ad::linear(agent_hidden, tape.param(psi_w_), tape.param(psi_b_));
  // No key bias: it would shift every score of a receiver equally and cancel in the softmax.
  const ad::Var key = ad::gather_rows(ad::matmul(nodes, tape.param(xi_node_)), src) +
                      ad::matmul(edge_embed, tape.param(xi_edge_));
  const ad::Var value = ad::gather_rows(ad::matmul(nodes, tape.param(phi_node_)), src) +
                        ad::linear(edge_embed, tape.param(phi_edge_), tape.param(phi_b_));

  ad::Var scores = ad::row_dot(ad::gather_rows(query, dst), key);
  if (scale_ == AttentionScale::kDimension) {
    scores = ad::affine(scores, 1.0 / std::sqrt(static_cast<double>(kHiddenWidth)));
  } else {
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (int d : dst) degree[static_cast<std::size_t>(d)] += 1.0;
    ad::Matrix inv(edge_count, 1);
    for (Eigen::Index i = 0; i < edge_count; ++i) inv(i, 0) = 1.0 / std::sqrt(degree[static_cast<std::size_t>(dst[i])]);
    scores = ad::scale_rows(scores, tape.constant(std::move(inv)));
  }
  out.attention = ad::segment_softmax(scores, dst, n);
  const ad::Var messages = ad::scatter_add_rows(ad::scale_rows(value, out.attention), dst, n);
  out.hidden = gamma + messages;
  return out;
}

ad::Var edge_feature_var(ad::Tape & tape, const SceneGraph & graph, const ad::Var & positions,
                         const ad::Var & velocities)
{
  const int n = graph.agent_count();
  if (positions.rows() != n || velocities.rows() != n || positions.cols() != 2 || velocities.cols() != 2) {
    throw NumericError("edge_feature_var: positions/velocities must be n x 2");
  }
  if (graph.edges.empty()) return tape.constant(ad::Matrix::Zero(0, kEdgeFeatureWidth));
  ad::Var all_pos = positions;
  ad::Var all_vel = velocities;
  if (!graph.roads.empty()) {
    const auto r = static_cast<Eigen::Index>(graph.roads.size());
    ad::Matrix road_pos(r, 2);
    for (Eigen::Index i = 0; i < r; ++i) {
      road_pos(i, 0) = graph.roads[static_cast<std::size_t>(i)].position.x;
      road_pos(i, 1) = graph.roads[static_cast<std::size_t>(i)].position.y;
    }
    const ad::Var pos_parts[] = {positions, tape.constant(std::move(road_pos))};
    const ad::Var vel_parts[] = {velocities, tape.constant(ad::Matrix::Zero(r, 2))};
    all_pos = ad::concat_rows(pos_parts);
    all_vel = ad::concat_rows(vel_parts);
  }
  std::vector<int> src;
  std::vector<int> dst;
  for (const auto & e : graph.edges) {
    src.push_back(e.src);
    dst.push_back(e.dst);
  }
  const ad::Var v_src = ad::gather_rows(all_vel, src);
  const ad::Var v_dst = ad::gather_rows(velocities, dst);
  const ad::Var parts[] = {v_src, v_dst, ad::gather_rows(all_pos, src) - ad::gather_rows(positions, dst),
                           v_src - v_dst};
  return ad::concat_cols(parts);
}

ad::Var edge_feature_const(ad::Tape & tape, const SceneGraph & graph)
{
  ad::Matrix m(static_cast<Eigen::Index>(graph.edges.size()), kEdgeFeatureWidth);
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    for (int k = 0; k < kEdgeFeatureWidth; ++k) {
      m(static_cast<Eigen::Index>(i), k) = graph.edges[i].features[static_cast<std::size_t>(k)];
    }
  }
  return tape.constant(std::move(m));
}

ad::Matrix message_pass(const SceneGraph & graph, const ad::ParamStore & store, const MessagePassing & mp,
                        std::vector<double> * attention)
{
  ad::Tape tape(&store, /*record=*/false);
  const ad::Var hidden = tape.constant(graph.agent_hidden);
  const MessagePassResult r = mp.apply(tape, graph, hidden, edge_feature_const(tape, graph));
  if (attention != nullptr) {
    attention->clear();
    if (r.attention.valid()) {
      const ad::Matrix & a = r.attention.value();
      attention->assign(a.data(), a.data() + a.size());
    }
  }
  return r.hidden.value();
}

std::string format_edge_dump(const SceneGraph & graph, std::span<const double> attention)
{
  std::string out = "src\tdst\tsrc_type\tattention\tv_src_x\tv_src_y\tv_dst_x\tv_dst_y\tdp_x\tdp_y\tdv_x\tdv_y\n";
  char buf[64];
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const Edge & e = graph.edges[i];
    out += std::to_string(e.src) + "\t" + std::to_string(e.dst) + "\t" +
           (e.src < graph.agent_count() ? "agent" : "road");
    std::snprintf(buf, sizeof(buf), "\t%.6f", i < attention.size() ? attention[i] : 0.0);
    out += buf;
    for (double f : e.features) {
      std::snprintf(buf, sizeof(buf), "\t%.6f", f);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace jointcast::graph
