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

#ifndef JOINTCAST_AD_PARAM_STORE_HPP_
#define JOINTCAST_AD_PARAM_STORE_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jointcast::ad
{

/// Dense row-major float64 matrix. Vectors are 1 x n rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Shape plus row-major values; the interchange form used by checkpoints.
struct Tensor
{
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::optional<std::vector<double>> grad;

  static Tensor from_matrix(const Matrix & m);
  Matrix to_matrix() const;
  std::size_t numel() const;
};

struct ParamId
{
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

/// Named parameters in insertion order, with Adam moments per parameter.
class ParamStore
{
public:
  ParamId add(std::string name, Matrix value);
  std::optional<ParamId> find(std::string_view name) const;
  /// Throws NumericError when `name` is not registered.
  ParamId id(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  const std::string & name(ParamId p) const { return entries_[p.index].name; }
  const Matrix & value(ParamId p) const { return entries_[p.index].value; }
  Matrix & value(ParamId p) { return entries_[p.index].value; }
  Matrix & first_moment(ParamId p) { return entries_[p.index].m; }
  Matrix & second_moment(ParamId p) { return entries_[p.index].v; }
  const Matrix & first_moment(ParamId p) const { return entries_[p.index].m; }
  const Matrix & second_moment(ParamId p) const { return entries_[p.index].v; }

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// Same names, shapes, values, moments and step, compared bitwise.
  bool identical(const ParamStore & other) const;

private:
  struct Entry
  {
    std::string name;
    Matrix value;
    Matrix m;
    Matrix v;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

/// Gradient accumulators aligned with a ParamStore.
class GradBuffer
{
public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore & store);

  std::size_t size() const { return grads_.size(); }
  Matrix & operator[](ParamId p) { return grads_[p.index]; }
  const Matrix & operator[](ParamId p) const { return grads_[p.index]; }

  void zero();
  void add(const GradBuffer & other);
  void scale(double s);
  double global_norm() const;

private:
  std::vector<Matrix> grads_;
};

}  // namespace jointcast::ad

#endif  // JOINTCAST_AD_PARAM_STORE_HPP_
