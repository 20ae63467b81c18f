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

#include "jointcast/ad/grad_check.hpp"
#include "jointcast/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace jointcast::ad
{
namespace
{

struct Probe
{
  double value;
  std::uint64_t kinks;
};

Probe evaluate(ParamStore & store, const ScalarFn & fn)
{
  Tape tape(&store, /*record=*/false);
  tape.set_track_kinks(true);
  const Var out = fn(tape);
  return {out.scalar(), tape.kink_signature()};
}

}  // namespace

GradCheckReport grad_check(ParamStore & store, const ScalarFn & fn, const GradCheckOptions & opts)
{
  GradBuffer analytic(store);
  std::uint64_t base_kinks = 0;
  double base_value = 0.0;
  {
    Tape tape(&store);
    tape.set_track_kinks(true);
    const Var out = fn(tape);
    base_kinks = tape.kink_signature();
    base_value = out.scalar();
    tape.backward(out);
    tape.accumulate_param_grads(analytic);
  }
  if (opts.corrupt) opts.corrupt(analytic);

  GradCheckReport report;
  struct Seen
  {
    double analytic, numeric;
  };
  std::vector<Seen> seen;
  double max_abs_f = std::abs(base_value);
  std::mt19937_64 rng(opts.seed);
  for (std::size_t p = 0; p < store.size(); ++p) {
    const ParamId id{p};
    Matrix & value = store.value(id);
    const auto n = static_cast<std::size_t>(value.size());
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_param > 0 && n > opts.max_coords_per_param) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(coords[i], coords[uniform_index(rng, i + 1)]);
      coords.resize(opts.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t c : coords) {
      double & x = value.data()[c];
      const double saved = x;
      x = saved + opts.step;
      const Probe plus = evaluate(store, fn);
      x = saved - opts.step;
      const Probe minus = evaluate(store, fn);
      x = saved;
      if (plus.kinks != base_kinks || minus.kinks != base_kinks) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * opts.step);
      const double a = analytic[id].data()[c];
      max_abs_f = std::max({max_abs_f, std::abs(plus.value), std::abs(minus.value)});
      seen.push_back({a, numeric});
      const double rel = std::abs(a - numeric) / (std::abs(a) + 1e-8);
      ++report.checked;
      if (rel > report.max_rel_error || std::isnan(rel)) {
        report.max_rel_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
        report.worst_param = store.name(id);
        report.worst_index = c;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }

  report.noise_floor = std::numeric_limits<double>::epsilon() * max_abs_f / (2.0 * opts.step);
  for (const Seen & s : seen) {
    const double diff = std::abs(s.analytic - s.numeric);
    if (std::abs(s.analytic) >= 1e5 * report.noise_floor) {
      const double rel = diff / (std::abs(s.analytic) + 1e-8);
      report.max_rel_error_resolved = std::max(report.max_rel_error_resolved,
                                               std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel);
    } else {
      ++report.unresolved;
      const double ratio = report.noise_floor > 0 ? diff / report.noise_floor
                                                  : (diff > 0 ? std::numeric_limits<double>::infinity() : 0.0);
      report.max_noise_ratio_unresolved = std::max(report.max_noise_ratio_unresolved,
                                                   std::isnan(ratio) ? std::numeric_limits<double>::infinity() : ratio);
    }
  }
  return report;
}

}  // namespace jointcast::ad
