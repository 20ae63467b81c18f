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

#ifndef JOINTCAST_AD_TAPE_HPP_
#define JOINTCAST_AD_TAPE_HPP_

#include "jointcast/ad/param_store.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace jointcast::ad
{

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var
{
public:
  Var() = default;
  Var(Tape * tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape * tape() const { return tape_; }
  int id() const { return id_; }
  const Matrix & value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1 x 1 node.
  double scalar() const;

private:
  Tape * tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape over dense matrices.
///
/// Nodes are appended in evaluation order; backward() walks them in reverse and
/// calls each node's adjoint rule once. Parameter leaves reference the store's
/// matrices directly, so a Tape must not outlive the ParamStore it reads.
class Tape
{
public:
  using BackwardFn = std::function<void(Tape &, const Matrix & out_grad)>;

  explicit Tape(const ParamStore * store = nullptr, bool record = true);
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  Var constant(Matrix value);
  /// Non-parameter leaf that receives an adjoint (for Jacobian probes).
  Var leaf(Matrix value);
  Var param(ParamId id);
  Var param(std::string_view name);
  const ParamStore * store() const { return store_; }

  const Matrix & value(int id) const;
  /// Adjoint of a node after backward(); zeros if nothing flowed into it.
  Matrix grad(const Var & v) const;

  /// Seeds d(root)/d(root) = 1 for a 1 x 1 root.
  void backward(const Var & root);
  void backward(const Var & root, const Matrix & seed);
  void accumulate_param_grads(GradBuffer & out) const;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Kink tracking: non-smooth ops hash their branch pattern so a gradient
  // checker can tell when a finite-difference probe crossed a kink.
  void set_track_kinks(bool on) { track_kinks_ = on; }
  bool track_kinks() const { return track_kinks_; }
  void mix_kink(std::uint64_t h);
  std::uint64_t kink_signature() const { return kink_hash_; }

  // Op-author interface. `fn` is dropped when no input needs a gradient.
  Var push(Matrix value, std::initializer_list<int> inputs, BackwardFn fn);
  Var push(Matrix value, std::span<const int> inputs, BackwardFn fn);
  void add_grad(int id, const Matrix & g);
  template <typename Expr>
  void add_grad_expr(int id, const Expr & g)
  {
    Node & n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.has_grad) {
      n.grad += g;
    } else {
      n.grad = g;
      n.has_grad = true;
    }
  }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

private:
  struct Node
  {
    Matrix value;
    const Matrix * ref = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    BackwardFn fn;
    long param = -1;
  };

  const ParamStore * store_;
  bool record_;
  bool track_kinks_ = false;
  std::uint64_t kink_hash_ = 0xcbf29ce484222325ULL;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;  // param index -> node id, -1 when absent
};

// ---- operations -----------------------------------------------------------

Var matmul(const Var & a, const Var & b);
/// x * w + b with b (1 x out) broadcast over rows; `b` may be an invalid Var.
Var linear(const Var & x, const Var & w, const Var & b);
Var add(const Var & a, const Var & b);
Var sub(const Var & a, const Var & b);
Var hadamard(const Var & a, const Var & b);
/// scale * a + shift, elementwise.
Var affine(const Var & a, double scale, double shift = 0.0);
Var relu(const Var & a);
Var sigmoid(const Var & a);
Var tanh(const Var & a);
Var exp(const Var & a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var & a, Eigen::Index start, Eigen::Index count);
Var gather_rows(const Var & a, std::span<const int> rows);
/// out[rows[i]] += a[i]; out has `out_rows` rows.
Var scatter_add_rows(const Var & a, std::span<const int> rows, Eigen::Index out_rows);
/// Row-wise inner product: (E x d, E x d) -> E x 1.
Var row_dot(const Var & a, const Var & b);
/// a(i, :) * col(i): (E x d, E x 1) -> E x d.
Var scale_rows(const Var & a, const Var & col);
/// Softmax of an E x 1 score column within each segment (segments[i] names the group of row i).
Var segment_softmax(const Var & scores, std::span<const int> segments, int segment_count);
/// Row-wise softmax restricted to columns where mask is true; masked columns are exactly 0.
Var masked_softmax(const Var & logits, const std::vector<bool> & mask);
/// sum_i weights[i] * -log softmax_mask(logits[i])[targets[i]]  (1 x 1).
Var softmax_cross_entropy_sum(const Var & logits, std::span<const int> targets,
                              std::span<const double> weights, const std::vector<bool> & mask);
/// Euclidean norm of every row (n x 1); the subgradient at 0 is taken as 0.
Var row_norm(const Var & a);
Var sum(const Var & a);
Var sum_squares(const Var & a);
/// 0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1), sigma = exp(log_sigma).
Var kl_diag_gaussian(const Var & mu, const Var & log_sigma);

inline Var operator+(const Var & a, const Var & b) { return add(a, b); }
inline Var operator-(const Var & a, const Var & b) { return sub(a, b); }

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_TAPE_HPP_
