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

#ifndef JOINTCAST_AD_ADAM_HPP_
#define JOINTCAST_AD_ADAM_HPP_

#include "jointcast/ad/param_store.hpp"

namespace jointcast::ad
{

struct AdamConfig
{
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in parameter order. Increments the store's step
/// counter first, so the first call uses t = 1. Throws NumericError naming the
/// parameter if any gradient entry is NaN or infinite; the store is untouched then.
void adam_step(ParamStore & store, const GradBuffer & grads, const AdamConfig & cfg);

/// Scales all gradients so their global L2 norm is at most `max_norm`. Returns the pre-clip norm.
double clip_global_norm(GradBuffer & grads, double max_norm);

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_ADAM_HPP_
