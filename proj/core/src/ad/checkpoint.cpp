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

#include "jointcast/ad/checkpoint.hpp"

#include "jointcast/error.hpp"
#include "jointcast/scenario_io.hpp"

#include <bit>
#include <cstring>

namespace jointcast::ad
{
namespace
{

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string & out, T v)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_matrix(std::string & out, const Matrix & m)
{
  out.append(reinterpret_cast<const char *>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
}

class Reader
{
public:
  explicit Reader(const std::string & bytes) : bytes_(bytes) {}

  template <typename T>
  T get()
  {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(std::size_t n)
  {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_matrix(Matrix & m)
  {
    const std::size_t n = sizeof(double) * static_cast<std::size_t>(m.size());
    need(n);
    std::memcpy(m.data(), bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (bytes_.size() - pos_ < n) throw SchemaError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  const std::string & bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ParamStore & store, const std::string & metadata)
{
  std::string out;
  out.append("JCKP", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, store.step());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(metadata.size()));
  out.append(metadata);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const ParamId id{i};
    const std::string & name = store.name(id);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    const Matrix & v = store.value(id);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v.cols()));
    put_matrix(out, v);
    put_matrix(out, store.first_moment(id));
    put_matrix(out, store.second_moment(id));
  }
  return out;
}

LoadedCheckpoint parse_checkpoint(const std::string & bytes)
{
  Reader r(bytes);
  if (r.get_string(4) != "JCKP") throw SchemaError("not a jointcast checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " + std::to_string(version));
  }
  LoadedCheckpoint out;
  const auto step = r.get<std::uint64_t>();
  out.metadata = r.get_string(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_string(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 2) throw SchemaError("checkpoint tensor '" + name + "' has rank > 2");
    std::uint64_t dims[2] = {1, 1};
    for (std::uint32_t k = 0; k < rank; ++k) dims[k + (2 - rank)] = r.get<std::uint64_t>();
    if (dims[0] * dims[1] > (std::uint64_t{1} << 32)) throw SchemaError("checkpoint tensor '" + name + "' too large");
    Matrix value(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
    r.get_matrix(value);
    const ParamId id = out.store.add(std::move(name), std::move(value));
    r.get_matrix(out.store.first_moment(id));
    r.get_matrix(out.store.second_moment(id));
  }
  if (!r.done()) throw SchemaError("trailing bytes after checkpoint tensors");
  out.store.set_step(step);
  return out;
}

void save_checkpoint(const ParamStore & store, const std::string & metadata,
                     const std::filesystem::path & path)
{
  write_text_file(path, serialize_checkpoint(store, metadata));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path & path)
{
  try {
    return parse_checkpoint(read_text_file(path));
  } catch (const SchemaError & e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const NumericError & e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace jointcast::ad
