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

#ifndef JOINTCAST_AD_GRAD_CHECK_HPP_
#define JOINTCAST_AD_GRAD_CHECK_HPP_

#include "jointcast/ad/param_store.hpp"
#include "jointcast/ad/tape.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace jointcast::ad
{

/// Builds a scalar (1 x 1) on the given tape from parameters in the tape's store.
/// Must be a pure function of the store's values.
using ScalarFn = std::function<Var(Tape &)>;

struct GradCheckOptions
{
  double step = 1e-5;
  /// 0 checks every coordinate; otherwise at most this many random coordinates per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Applied to the analytic gradients before comparison (harness self-tests).
  std::function<void(GradBuffer &)> corrupt;
};

struct GradCheckReport
{
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-h probes changed a non-smooth branch (ReLU sign, edge set, ...).
  std::size_t skipped_kinks = 0;

  /// Round-off in the central difference: eps * max|f| / (2h). A coordinate with
  /// |analytic| below noise_floor / 1e-4 cannot show a relative error under 1e-4
  /// even when the gradient is exact.
  double noise_floor = 0.0;
  /// max_rel_error restricted to coordinates with |analytic| >= 1e5 * noise_floor,
  /// where round-off contributes at most about 1e-5.
  double max_rel_error_resolved = 0.0;
  /// Over the remaining coordinates: max |analytic - numeric| / noise_floor.
  double max_noise_ratio_unresolved = 0.0;
  std::size_t unresolved = 0;
};

/// Compares reverse-mode gradients with central differences:
///   max |analytic - numeric| / (|analytic| + 1e-8).
GradCheckReport grad_check(ParamStore & store, const ScalarFn & fn, const GradCheckOptions & opts = {});

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_GRAD_CHECK_HPP_
