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

#include "jointcast/ad/adam.hpp"

#include "jointcast/error.hpp"

#include <cmath>

namespace jointcast::ad
{

void adam_step(ParamStore & store, const GradBuffer & grads, const AdamConfig & cfg)
{
  if (grads.size() != store.size()) throw NumericError("adam_step: gradients not aligned with store");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const ParamId id{i};
    if (!grads[id].allFinite()) {
      throw NumericError("adam_step: non-finite gradient for parameter '" + store.name(id) + "'");
    }
  }
  const std::uint64_t t = store.step() + 1;
  store.set_step(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const ParamId id{i};
    const Matrix & g = grads[id];
    Matrix & m = store.first_moment(id);
    Matrix & v = store.second_moment(id);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    store.value(id).array() -=
      cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
}

double clip_global_norm(GradBuffer & grads, double max_norm)
{
  const double norm = grads.global_norm();
  if (std::isfinite(norm) && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace jointcast::ad
