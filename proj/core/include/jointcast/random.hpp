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

#ifndef JOINTCAST_RANDOM_HPP_
#define JOINTCAST_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace jointcast
{

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += kGoldenGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `k` derived from `base`: splitmix64(base + k * golden).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k)
{
  return splitmix64(base + k * kGoldenGamma);
}

// Distribution helpers built on raw engine output; the standard distributions
// are implementation-defined, these are reproducible across toolchains.

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64 & rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64 & rng, double lo, double hi)
{
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64 & rng, std::uint64_t n)
{
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline bool bernoulli(std::mt19937_64 & rng, double p)
{
  return uniform01(rng) < p;
}

/// Standard normal via Box-Muller (one draw per call, two engine draws).
inline double standard_normal(std::mt19937_64 & rng)
{
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace jointcast

#endif  // JOINTCAST_RANDOM_HPP_
