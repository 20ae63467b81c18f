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

#include "jointcast/ad/tape.hpp"

#include "jointcast/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace jointcast::ad
{

const Matrix & Var::value() const { return tape_->value(id_); }

double Var::scalar() const
{
  const Matrix & v = value();
  if (v.size() != 1) throw NumericError("scalar() on a non 1x1 node");
  return v(0, 0);
}

Tape::Tape(const ParamStore * store, bool record) : store_(store), record_(record)
{
  if (store_ != nullptr) param_nodes_.assign(store_->size(), -1);
}

Var Tape::constant(Matrix value)
{
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value)
{
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(ParamId id)
{
  if (store_ == nullptr || id.index >= store_->size()) {
    throw NumericError("tape has no parameter with index " + std::to_string(id.index));
  }
  int & cached = param_nodes_[id.index];
  if (cached >= 0) return {this, cached};
  Node n;
  n.ref = &store_->value(id);
  n.param = static_cast<long>(id.index);
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  cached = static_cast<int>(nodes_.size() - 1);
  return {this, cached};
}

Var Tape::param(std::string_view name)
{
  if (store_ == nullptr) throw NumericError("tape has no parameter store");
  return param(store_->id(name));
}

const Matrix & Tape::value(int id) const
{
  const Node & n = nodes_[static_cast<std::size_t>(id)];
  return n.ref != nullptr ? *n.ref : n.value;
}

Matrix Tape::grad(const Var & v) const
{
  const Node & n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.has_grad) return n.grad;
  const Matrix & val = value(v.id());
  return Matrix::Zero(val.rows(), val.cols());
}

Var Tape::push(Matrix value, std::initializer_list<int> inputs, BackwardFn fn)
{
  return push(std::move(value), std::span<const int>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::push(Matrix value, std::span<const int> inputs, BackwardFn fn)
{
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (int i : inputs) {
      if (nodes_[static_cast<std::size_t>(i)].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.fn = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::add_grad(int id, const Matrix & g) { add_grad_expr(id, g); }

void Tape::backward(const Var & root)
{
  const Matrix & v = value(root.id());
  if (v.size() != 1) throw NumericError("backward() without a seed needs a 1x1 root");
  backward(root, Matrix::Ones(1, 1));
}

void Tape::backward(const Var & root, const Matrix & seed)
{
  if (!record_) throw NumericError("backward() on a non-recording tape");
  if (root.tape() != this) throw NumericError("backward() root belongs to another tape");
  for (auto & n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  add_grad(root.id(), seed);
  for (int i = root.id(); i >= 0; --i) {
    Node & n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.fn) continue;
    n.fn(*this, n.grad);
  }
}

void Tape::accumulate_param_grads(GradBuffer & out) const
{
  for (const auto & n : nodes_) {
    if (n.param >= 0 && n.has_grad) out[ParamId{static_cast<std::size_t>(n.param)}] += n.grad;
  }
}

void Tape::mix_kink(std::uint64_t h)
{
  kink_hash_ ^= h + 0x9e3779b97f4a7c15ULL + (kink_hash_ << 6) + (kink_hash_ >> 2);
}

namespace
{

void require(bool ok, const char * op, const std::string & detail)
{
  if (!ok) throw NumericError(std::string(op) + ": shape mismatch (" + detail + ")");
}

std::string dims(const Matrix & m)
{
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape & tape_of(const Var & a)
{
  if (!a.valid()) throw NumericError("operation on an empty Var");
  return *a.tape();
}

}  // namespace

Var matmul(const Var & a, const Var & b)
{
  Tape & t = tape_of(a);
  const Matrix & av = a.value();
  const Matrix & bv = b.value();
  require(av.cols() == bv.rows(), "matmul", dims(av) + " * " + dims(bv));
  const int ia = a.id();
  const int ib = b.id();
  return t.push(av * bv, {ia, ib}, [ia, ib](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(ia)) tp.add_grad_expr(ia, g * tp.value(ib).transpose());
    if (tp.needs_grad(ib)) tp.add_grad_expr(ib, tp.value(ia).transpose() * g);
  });
}

Var linear(const Var & x, const Var & w, const Var & b)
{
  Tape & t = tape_of(x);
  const Matrix & xv = x.value();
  const Matrix & wv = w.value();
  require(xv.cols() == wv.rows(), "linear", dims(xv) + " * " + dims(wv));
  Matrix out = xv * wv;
  const int ix = x.id();
  const int iw = w.id();
  const int ib = b.valid() ? b.id() : -1;
  if (ib >= 0) {
    const Matrix & bv = b.value();
    require(bv.rows() == 1 && bv.cols() == wv.cols(), "linear bias", dims(bv));
    out.rowwise() += bv.row(0);
  }
  auto fn = [ix, iw, ib](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(ix)) tp.add_grad_expr(ix, g * tp.value(iw).transpose());
    if (tp.needs_grad(iw)) tp.add_grad_expr(iw, tp.value(ix).transpose() * g);
    if (ib >= 0 && tp.needs_grad(ib)) tp.add_grad_expr(ib, g.colwise().sum());
  };
  if (ib >= 0) return t.push(std::move(out), {ix, iw, ib}, fn);
  return t.push(std::move(out), {ix, iw}, fn);
}

Var add(const Var & a, const Var & b)
{
  Tape & t = tape_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", dims(a.value()) + " + " + dims(b.value()));
  const int ia = a.id();
  const int ib = b.id();
  return t.push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape & tp, const Matrix & g) {
    tp.add_grad_expr(ia, g);
    tp.add_grad_expr(ib, g);
  });
}

Var sub(const Var & a, const Var & b)
{
  Tape & t = tape_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", dims(a.value()) + " - " + dims(b.value()));
  const int ia = a.id();
  const int ib = b.id();
  return t.push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape & tp, const Matrix & g) {
    tp.add_grad_expr(ia, g);
    tp.add_grad_expr(ib, -g);
  });
}

Var hadamard(const Var & a, const Var & b)
{
  Tape & t = tape_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard", dims(a.value()) + " .* " + dims(b.value()));
  const int ia = a.id();
  const int ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(ia)) tp.add_grad_expr(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.needs_grad(ib)) tp.add_grad_expr(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var affine(const Var & a, double scale, double shift)
{
  Tape & t = tape_of(a);
  const int ia = a.id();
  Matrix out = (a.value().array() * scale + shift).matrix();
  return t.push(std::move(out), {ia}, [ia, scale](Tape & tp, const Matrix & g) {
    tp.add_grad_expr(ia, g * scale);
  });
}

Var relu(const Var & a)
{
  Tape & t = tape_of(a);
  const Matrix & av = a.value();
  if (t.track_kinks()) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index i = 0; i < av.size(); ++i) {
      h = (h ^ static_cast<std::uint64_t>(av.data()[i] > 0.0)) * 1099511628211ULL;
    }
    t.mix_kink(h);
  }
  const int ia = a.id();
  const int out_id = static_cast<int>(t.size());
  return t.push(av.cwiseMax(0.0), {ia}, [ia, out_id](Tape & tp, const Matrix & g) {
    const Matrix & y = tp.value(out_id);
    tp.add_grad_expr(ia, (y.array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var sigmoid(const Var & a)
{
  Tape & t = tape_of(a);
  const int ia = a.id();
  const int out_id = static_cast<int>(t.size());
  Matrix y = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return t.push(std::move(y), {ia}, [ia, out_id](Tape & tp, const Matrix & g) {
    const Matrix & y = tp.value(out_id);
    tp.add_grad_expr(ia, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var tanh(const Var & a)
{
  Tape & t = tape_of(a);
  const int ia = a.id();
  const int out_id = static_cast<int>(t.size());
  Matrix y = a.value().array().tanh().matrix();
  return t.push(std::move(y), {ia}, [ia, out_id](Tape & tp, const Matrix & g) {
    const Matrix & y = tp.value(out_id);
    tp.add_grad_expr(ia, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var exp(const Var & a)
{
  Tape & t = tape_of(a);
  const int ia = a.id();
  const int out_id = static_cast<int>(t.size());
  Matrix y = a.value().array().exp().matrix();
  return t.push(std::move(y), {ia}, [ia, out_id](Tape & tp, const Matrix & g) {
    tp.add_grad_expr(ia, g.cwiseProduct(tp.value(out_id)));
  });
}

Var concat_cols(std::span<const Var> parts)
{
  if (parts.empty()) throw NumericError("concat_cols: no inputs");
  Tape & t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const auto & p : parts) {
    require(p.rows() == rows, "concat_cols", dims(p.value()));
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.middleCols(offsets[k], parts[k].cols()) = parts[k].value();
  }
  return t.push(std::move(out), ids, [ids, offsets](Tape & tp, const Matrix & g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.needs_grad(ids[k])) continue;
      tp.add_grad_expr(ids[k], g.middleCols(offsets[k], tp.value(ids[k]).cols()));
    }
  });
}

Var concat_rows(std::span<const Var> parts)
{
  if (parts.empty()) throw NumericError("concat_rows: no inputs");
  Tape & t = tape_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const auto & p : parts) {
    require(p.cols() == cols, "concat_rows", dims(p.value()));
    ids.push_back(p.id());
    offsets.push_back(rows);
    rows += p.rows();
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.middleRows(offsets[k], parts[k].rows()) = parts[k].value();
  }
  return t.push(std::move(out), ids, [ids, offsets](Tape & tp, const Matrix & g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.needs_grad(ids[k])) continue;
      tp.add_grad_expr(ids[k], g.middleRows(offsets[k], tp.value(ids[k]).rows()));
    }
  });
}

Var slice_cols(const Var & a, Eigen::Index start, Eigen::Index count)
{
  Tape & t = tape_of(a);
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", dims(a.value()));
  const int ia = a.id();
  return t.push(a.value().middleCols(start, count), {ia}, [ia, start, count](Tape & tp, const Matrix & g) {
    const Matrix & av = tp.value(ia);
    Matrix full = Matrix::Zero(av.rows(), av.cols());
    full.middleCols(start, count) = g;
    tp.add_grad_expr(ia, full);
  });
}

Var gather_rows(const Var & a, std::span<const int> rows)
{
  Tape & t = tape_of(a);
  const Matrix & av = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < av.rows(), "gather_rows", "row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
  }
  const int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {ia}, [ia, idx](Tape & tp, const Matrix & g) {
    const Matrix & av = tp.value(ia);
    Matrix full = Matrix::Zero(av.rows(), av.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.add_grad_expr(ia, full);
  });
}

Var scatter_add_rows(const Var & a, std::span<const int> rows, Eigen::Index out_rows)
{
  Tape & t = tape_of(a);
  const Matrix & av = a.value();
  require(static_cast<Eigen::Index>(rows.size()) == av.rows(), "scatter_add_rows", dims(av));
  Matrix out = Matrix::Zero(out_rows, av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < out_rows, "scatter_add_rows", "row index out of range");
    out.row(rows[i]) += av.row(static_cast<Eigen::Index>(i));
  }
  const int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {ia}, [ia, idx](Tape & tp, const Matrix & g) {
    Matrix ga(static_cast<Eigen::Index>(idx.size()), g.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(static_cast<Eigen::Index>(i)) = g.row(idx[i]);
    tp.add_grad_expr(ia, ga);
  });
}

Var row_dot(const Var & a, const Var & b)
{
  Tape & t = tape_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "row_dot", dims(a.value()) + " . " + dims(b.value()));
  const int ia = a.id();
  const int ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(ia)) tp.add_grad_expr(ia, (tp.value(ib).array().colwise() * g.col(0).array()).matrix());
    if (tp.needs_grad(ib)) tp.add_grad_expr(ib, (tp.value(ia).array().colwise() * g.col(0).array()).matrix());
  });
}

Var scale_rows(const Var & a, const Var & col)
{
  Tape & t = tape_of(a);
  require(col.cols() == 1 && col.rows() == a.rows(), "scale_rows", dims(a.value()) + " by " + dims(col.value()));
  const int ia = a.id();
  const int ic = col.id();
  Matrix out = (a.value().array().colwise() * col.value().col(0).array()).matrix();
  return t.push(std::move(out), {ia, ic}, [ia, ic](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(ia)) tp.add_grad_expr(ia, (g.array().colwise() * tp.value(ic).col(0).array()).matrix());
    if (tp.needs_grad(ic)) tp.add_grad_expr(ic, g.cwiseProduct(tp.value(ia)).rowwise().sum());
  });
}

Var segment_softmax(const Var & scores, std::span<const int> segments, int segment_count)
{
  Tape & t = tape_of(scores);
  const Matrix & s = scores.value();
  require(s.cols() == 1 && s.rows() == static_cast<Eigen::Index>(segments.size()), "segment_softmax", dims(s));
  std::vector<double> seg_max(static_cast<std::size_t>(segment_count), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    require(segments[i] >= 0 && segments[i] < segment_count, "segment_softmax", "segment out of range");
    seg_max[segments[i]] = std::max(seg_max[segments[i]], s(static_cast<Eigen::Index>(i), 0));
  }
  Matrix out(s.rows(), 1);
  std::vector<double> seg_sum(static_cast<std::size_t>(segment_count), 0.0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double e = std::exp(s(static_cast<Eigen::Index>(i), 0) - seg_max[segments[i]]);
    out(static_cast<Eigen::Index>(i), 0) = e;
    seg_sum[segments[i]] += e;
  }
  for (std::size_t i = 0; i < segments.size(); ++i) out(static_cast<Eigen::Index>(i), 0) /= seg_sum[segments[i]];
  const int is = scores.id();
  const int out_id = static_cast<int>(t.size());
  std::vector<int> seg(segments.begin(), segments.end());
  return t.push(std::move(out), {is}, [is, out_id, seg, segment_count](Tape & tp, const Matrix & g) {
    const Matrix & y = tp.value(out_id);
    std::vector<double> dot(static_cast<std::size_t>(segment_count), 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) dot[seg[i]] += g(static_cast<Eigen::Index>(i), 0) * y(static_cast<Eigen::Index>(i), 0);
    Matrix gs(y.rows(), 1);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      gs(r, 0) = y(r, 0) * (g(r, 0) - dot[seg[i]]);
    }
    tp.add_grad_expr(is, gs);
  });
}

namespace
{

// Row-wise masked softmax in plain matrices.
Matrix masked_softmax_values(const Matrix & logits, const std::vector<bool> & mask)
{
  Matrix p = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (mask[static_cast<std::size_t>(c)]) mx = std::max(mx, logits(r, c));
    }
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (!mask[static_cast<std::size_t>(c)]) continue;
      p(r, c) = std::exp(logits(r, c) - mx);
      z += p(r, c);
    }
    p.row(r) /= z;
  }
  return p;
}

}  // namespace

Var masked_softmax(const Var & logits, const std::vector<bool> & mask)
{
  Tape & t = tape_of(logits);
  require(static_cast<Eigen::Index>(mask.size()) == logits.cols(), "masked_softmax", "mask width");
  const int il = logits.id();
  const int out_id = static_cast<int>(t.size());
  return t.push(masked_softmax_values(logits.value(), mask), {il}, [il, out_id](Tape & tp, const Matrix & g) {
    const Matrix & p = tp.value(out_id);
    const Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    Matrix gl = p.cwiseProduct(g);
    gl -= (p.array().colwise() * dot.array()).matrix();
    tp.add_grad_expr(il, gl);
  });
}

Var softmax_cross_entropy_sum(const Var & logits, std::span<const int> targets,
                              std::span<const double> weights, const std::vector<bool> & mask)
{
  Tape & t = tape_of(logits);
  const Matrix & l = logits.value();
  require(static_cast<Eigen::Index>(targets.size()) == l.rows() && weights.size() == targets.size(),
          "softmax_cross_entropy_sum", "targets/weights length");
  require(static_cast<Eigen::Index>(mask.size()) == l.cols(), "softmax_cross_entropy_sum", "mask width");
  for (int tg : targets) {
    if (tg < 0 || tg >= l.cols() || !mask[static_cast<std::size_t>(tg)]) {
      throw NumericError("softmax_cross_entropy: target class " + std::to_string(tg) + " outside the mask");
    }
  }
  Matrix p = masked_softmax_values(l, mask);
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    // log p computed from the max-shifted logits for stability
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < l.cols(); ++c) {
      if (mask[static_cast<std::size_t>(c)]) mx = std::max(mx, l(r, c));
    }
    double z = 0.0;
    for (Eigen::Index c = 0; c < l.cols(); ++c) {
      if (mask[static_cast<std::size_t>(c)]) z += std::exp(l(r, c) - mx);
    }
    loss += weights[i] * -((l(r, targets[i]) - mx) - std::log(z));
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  const int il = logits.id();
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return t.push(std::move(out), {il}, [il, p = std::move(p), tg, w](Tape & tp, const Matrix & g) {
    Matrix gl = p;
    for (std::size_t i = 0; i < tg.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      gl(r, tg[i]) -= 1.0;
      gl.row(r) *= w[i] * g(0, 0);
    }
    tp.add_grad_expr(il, gl);
  });
}

Var row_norm(const Var & a)
{
  Tape & t = tape_of(a);
  const Matrix & av = a.value();
  Matrix out = av.rowwise().norm();
  if (t.track_kinks()) {
    std::uint64_t h = 7;
    for (Eigen::Index i = 0; i < out.rows(); ++i) h = h * 31 + static_cast<std::uint64_t>(out(i, 0) == 0.0);
    t.mix_kink(h);
  }
  const int ia = a.id();
  const int out_id = static_cast<int>(t.size());
  return t.push(std::move(out), {ia}, [ia, out_id](Tape & tp, const Matrix & g) {
    const Matrix & av = tp.value(ia);
    const Matrix & n = tp.value(out_id);
    Matrix ga = Matrix::Zero(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
      if (n(i, 0) > 0.0) ga.row(i) = av.row(i) * (g(i, 0) / n(i, 0));
    }
    tp.add_grad_expr(ia, ga);
  });
}

Var sum(const Var & a)
{
  Tape & t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  return t.push(std::move(out), {ia}, [ia](Tape & tp, const Matrix & g) {
    const Matrix & av = tp.value(ia);
    tp.add_grad_expr(ia, Matrix::Constant(av.rows(), av.cols(), g(0, 0)));
  });
}

Var sum_squares(const Var & a)
{
  Tape & t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const int ia = a.id();
  return t.push(std::move(out), {ia}, [ia](Tape & tp, const Matrix & g) {
    tp.add_grad_expr(ia, tp.value(ia) * (2.0 * g(0, 0)));
  });
}

Var kl_diag_gaussian(const Var & mu, const Var & log_sigma)
{
  Tape & t = tape_of(mu);
  const Matrix & m = mu.value();
  const Matrix & ls = log_sigma.value();
  require(m.rows() == ls.rows() && m.cols() == ls.cols(), "kl_diag_gaussian", dims(m) + " vs " + dims(ls));
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (m.array().square() + (2.0 * ls.array()).exp() - 2.0 * ls.array() - 1.0).sum();
  const int im = mu.id();
  const int il = log_sigma.id();
  return t.push(std::move(out), {im, il}, [im, il](Tape & tp, const Matrix & g) {
    if (tp.needs_grad(im)) tp.add_grad_expr(im, tp.value(im) * g(0, 0));
    if (tp.needs_grad(il)) {
      tp.add_grad_expr(il, (((2.0 * tp.value(il).array()).exp() - 1.0) * g(0, 0)).matrix());
    }
  });
}

}  // namespace jointcast::ad
