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

#ifndef JOINTCAST_TOOLS_CLI_HPP_
#define JOINTCAST_TOOLS_CLI_HPP_

#include "jointcast/synthgen.hpp"
#include "jointcast/training.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace jointcast::cli
{

/// Environment variable that overrides the output directory from a config file.
inline constexpr const char * kOutputDirEnv = "JOINTCAST_OUTPUT_DIR";

/// Component streams of the global seed: derive_seed(seed, k).
inline constexpr std::uint64_t kGenStream = 1;
inline constexpr std::uint64_t kTrainStream = 2;
inline constexpr std::uint64_t kEvalStream = 3;

struct RunConfig
{
  std::string subcommand;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "jointcast_out";
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path dump;
  std::string split = "test";

  synth::GenConfig gen;
  double val_fraction = 0.1;
  double test_fraction = 0.2;

  train::TrainConfig train;
  std::string attention_scale = "dimension";
  int log_every = 100;

  int n_samples = 1;
  std::optional<double> tau;         // defaults to the truncation rule for n_samples
  std::optional<double> oracle_fps;  // oracle intentions when set
};

/// Entry point: returns 0 on success, else the ErrorKind code (2 usage, 3 I/O, 4 schema, 5 numeric).
int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

/// Applies a JSON config document (the --config file format) on top of `cfg`.
void apply_config_json(const std::string & text, RunConfig & cfg);

}  // namespace jointcast::cli

#endif  // JOINTCAST_TOOLS_CLI_HPP_
