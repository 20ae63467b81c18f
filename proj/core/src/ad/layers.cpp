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

#include "jointcast/ad/layers.hpp"

#include "jointcast/error.hpp"
#include "jointcast/random.hpp"

#include <cmath>
#include <limits>

namespace jointcast::ad
{

Matrix init_weight(int fan_in, int fan_out, std::mt19937_64 & rng)
{
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -bound, bound);
  return w;
}

Mlp Mlp::create(ParamStore & store, const std::string & prefix, std::vector<LayerSpec> layers,
                std::mt19937_64 & rng)
{
  Mlp m;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string base = prefix + ".linear_" + std::to_string(k + 1);
    if (k > 0 && layers[k].in != layers[k - 1].out) {
      throw NumericError("mlp '" + prefix + "': layer widths do not chain");
    }
    m.weights_.push_back(store.add(base + ".weight", init_weight(layers[k].in, layers[k].out, rng)));
    m.biases_.push_back(store.add(base + ".bias", Matrix::Zero(1, layers[k].out)));
  }
  m.layers_ = std::move(layers);
  return m;
}

Mlp Mlp::bind(const ParamStore & store, const std::string & prefix, std::vector<LayerSpec> layers)
{
  Mlp m;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string base = prefix + ".linear_" + std::to_string(k + 1);
    const ParamId w = store.id(base + ".weight");
    const ParamId b = store.id(base + ".bias");
    if (store.value(w).rows() != layers[k].in || store.value(w).cols() != layers[k].out ||
        store.value(b).cols() != layers[k].out) {
      throw NumericError("parameter '" + base + "' has the wrong shape");
    }
    m.weights_.push_back(w);
    m.biases_.push_back(b);
  }
  m.layers_ = std::move(layers);
  return m;
}

Var Mlp::apply(Tape & tape, const Var & x) const
{
  if (x.cols() != in_width()) {
    throw NumericError("mlp: input width " + std::to_string(x.cols()) + ", expected " +
                       std::to_string(in_width()));
  }
  Var h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = linear(h, tape.param(weights_[k]), tape.param(biases_[k]));
    if (layers_[k].activation == Activation::kRelu) h = relu(h);
  }
  return h;
}

Var mlp_apply(Tape & tape, const Mlp & mlp, const Var & x) { return mlp.apply(tape, x); }

GruCell GruCell::create(ParamStore & store, const std::string & prefix, int input, int hidden,
                        std::mt19937_64 & rng)
{
  GruCell c;
  c.input_ = input;
  c.hidden_ = hidden;
  c.w_ih_ = store.add(prefix + ".w_ih", init_weight(input, 3 * hidden, rng));
  c.w_hh_ = store.add(prefix + ".w_hh", init_weight(hidden, 3 * hidden, rng));
  c.b_ih_ = store.add(prefix + ".b_ih", Matrix::Zero(1, 3 * hidden));
  c.b_hh_ = store.add(prefix + ".b_hh", Matrix::Zero(1, 3 * hidden));
  return c;
}

GruCell GruCell::bind(const ParamStore & store, const std::string & prefix, int input, int hidden)
{
  GruCell c;
  c.input_ = input;
  c.hidden_ = hidden;
  c.w_ih_ = store.id(prefix + ".w_ih");
  c.w_hh_ = store.id(prefix + ".w_hh");
  c.b_ih_ = store.id(prefix + ".b_ih");
  c.b_hh_ = store.id(prefix + ".b_hh");
  if (store.value(c.w_ih_).rows() != input || store.value(c.w_hh_).rows() != hidden ||
      store.value(c.w_ih_).cols() != 3 * hidden) {
    throw NumericError("gru '" + prefix + "' has the wrong shape");
  }
  return c;
}

Var GruCell::step(Tape & tape, const Var & x, const Var & h) const
{
  if (x.cols() != input_ || h.cols() != hidden_ || x.rows() != h.rows()) {
    throw NumericError("gru_cell_step: shape mismatch");
  }
  const Var gi = linear(x, tape.param(w_ih_), tape.param(b_ih_));
  const Var gh = linear(h, tape.param(w_hh_), tape.param(b_hh_));
  const Eigen::Index H = hidden_;
  const Var r = sigmoid(slice_cols(gi, 0, H) + slice_cols(gh, 0, H));
  const Var z = sigmoid(slice_cols(gi, H, H) + slice_cols(gh, H, H));
  const Var n = tanh(slice_cols(gi, 2 * H, H) + hadamard(r, slice_cols(gh, 2 * H, H)));
  return n + hadamard(z, h - n);
}

Var gru_cell_step(Tape & tape, const GruCell & cell, const Var & x, const Var & h)
{
  return cell.step(tape, x, h);
}

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, int target, double weight,
                                          const std::vector<bool> & mask)
{
  if (mask.size() != logits.size()) throw NumericError("softmax_cross_entropy: mask width");
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size() ||
      !mask[static_cast<std::size_t>(target)]) {
    throw NumericError("softmax_cross_entropy: target class " + std::to_string(target) +
                       " outside the mask");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (mask[c]) mx = std::max(mx, logits[c]);
  }
  SoftmaxCrossEntropy out;
  out.probs.assign(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (!mask[c]) continue;
    out.probs[c] = std::exp(logits[c] - mx);
    z += out.probs[c];
  }
  for (auto & p : out.probs) p /= z;
  out.loss = -weight * ((logits[static_cast<std::size_t>(target)] - mx) - std::log(z));
  return out;
}

double kl_diag_gaussian(std::span<const double> mu, std::span<const double> sigma)
{
  if (mu.size() != sigma.size()) throw NumericError("kl_diag_gaussian: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw NumericError("kl_diag_gaussian: sigma must be positive");
    const double s2 = sigma[i] * sigma[i];
    kl += mu[i] * mu[i] + s2 - std::log(s2) - 1.0;
  }
  return 0.5 * kl;
}

}  // namespace jointcast::ad
