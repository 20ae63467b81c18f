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

#ifndef JOINTCAST_AD_LAYERS_HPP_
#define JOINTCAST_AD_LAYERS_HPP_

#include "jointcast/ad/param_store.hpp"
#include "jointcast/ad/tape.hpp"

#include <random>
#include <string>
#include <vector>

namespace jointcast::ad
{

enum class Activation : std::uint8_t { kNone, kRelu };

struct LayerSpec
{
  int in = 0;
  int out = 0;
  Activation activation = Activation::kNone;
};

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights of shape fan_in x fan_out.
Matrix init_weight(int fan_in, int fan_out, std::mt19937_64 & rng);

/// Stack of affine layers. Parameters are registered as
/// "<prefix>.linear_<k>.weight" (in x out) and "<prefix>.linear_<k>.bias" (1 x out), k from 1.
class Mlp
{
public:
  Mlp() = default;
  static Mlp create(ParamStore & store, const std::string & prefix, std::vector<LayerSpec> layers,
                    std::mt19937_64 & rng);
  /// Binds to parameters already present in `store` (e.g. after loading a checkpoint).
  static Mlp bind(const ParamStore & store, const std::string & prefix, std::vector<LayerSpec> layers);

  Var apply(Tape & tape, const Var & x) const;
  const std::vector<LayerSpec> & layers() const { return layers_; }
  int in_width() const { return layers_.front().in; }
  int out_width() const { return layers_.back().out; }

private:
  std::vector<LayerSpec> layers_;
  std::vector<ParamId> weights_;
  std::vector<ParamId> biases_;
};

/// mlp_apply in functional form.
Var mlp_apply(Tape & tape, const Mlp & mlp, const Var & x);

/// Gated recurrent unit with the standard gate layout, gates packed [reset | update | candidate]:
///   r  = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
///   z  = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
///   n  = tanh(x W_in + b_in + r * (h W_hn + b_hn))
///   h' = (1 - z) * n + z * h
/// Parameters: "<prefix>.w_ih" (in x 3H), "<prefix>.w_hh" (H x 3H), "<prefix>.b_ih", "<prefix>.b_hh" (1 x 3H).
class GruCell
{
public:
  GruCell() = default;
  static GruCell create(ParamStore & store, const std::string & prefix, int input, int hidden,
                        std::mt19937_64 & rng);
  static GruCell bind(const ParamStore & store, const std::string & prefix, int input, int hidden);

  /// x: n x input, h: n x hidden -> n x hidden.
  Var step(Tape & tape, const Var & x, const Var & h) const;
  int input_width() const { return input_; }
  int hidden_width() const { return hidden_; }

private:
  int input_ = 0;
  int hidden_ = 0;
  ParamId w_ih_, w_hh_, b_ih_, b_hh_;
};

Var gru_cell_step(Tape & tape, const GruCell & cell, const Var & x, const Var & h);

struct SoftmaxCrossEntropy
{
  double loss = 0.0;
  std::vector<double> probs;
};

/// -w * log p(target) with p the softmax over the masked-in logits. Throws if target is masked out.
SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, int target, double weight,
                                          const std::vector<bool> & mask);

/// KL(N(mu, diag sigma^2) || N(0, I)).
double kl_diag_gaussian(std::span<const double> mu, std::span<const double> sigma);

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_LAYERS_HPP_
