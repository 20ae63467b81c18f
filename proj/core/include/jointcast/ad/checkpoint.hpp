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

#ifndef JOINTCAST_AD_CHECKPOINT_HPP_
#define JOINTCAST_AD_CHECKPOINT_HPP_

#include "jointcast/ad/param_store.hpp"

#include <filesystem>
#include <string>

namespace jointcast::ad
{

// Binary checkpoint, little-endian, version 1:
//   char[4]  magic "JCKP"
//   u32      version (= 1)
//   u64      global optimizer step
//   u32      metadata length, then that many bytes of UTF-8 (free-form JSON)
//   u32      tensor count
//   per tensor, in store order:
//     u32 name length, name bytes
//     u32 rank, u64 dims[rank]
//     f64 values[numel]  (row-major)
//     f64 adam_m[numel], f64 adam_v[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore & store, const std::string & metadata,
                     const std::filesystem::path & path);

struct LoadedCheckpoint
{
  ParamStore store;
  std::string metadata;
};

/// Throws IoError if unreadable, SchemaError if malformed or of another version.
LoadedCheckpoint load_checkpoint(const std::filesystem::path & path);

std::string serialize_checkpoint(const ParamStore & store, const std::string & metadata);
LoadedCheckpoint parse_checkpoint(const std::string & bytes);

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_CHECKPOINT_HPP_
