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

#include "jointcast/ad/param_store.hpp"

#include "jointcast/error.hpp"

#include <cmath>
#include <cstring>

namespace jointcast::ad
{

Tensor Tensor::from_matrix(const Matrix & m)
{
  Tensor t;
  t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  t.values.assign(m.data(), m.data() + m.size());
  return t;
}

Matrix Tensor::to_matrix() const
{
  if (shape.size() > 2) throw NumericError("tensor rank > 2 cannot be viewed as a matrix");
  const Eigen::Index rows = shape.size() == 2 ? static_cast<Eigen::Index>(shape[0]) : 1;
  const Eigen::Index cols = shape.empty()        ? 1
                            : shape.size() == 1 ? static_cast<Eigen::Index>(shape[0])
                                                : static_cast<Eigen::Index>(shape[1]);
  if (static_cast<std::size_t>(rows * cols) != values.size()) {
    throw NumericError("tensor shape does not match its value count");
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::size_t Tensor::numel() const
{
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

ParamId ParamStore::add(std::string name, Matrix value)
{
  if (index_.count(name) != 0) throw NumericError("duplicate parameter name '" + name + "'");
  ParamId id{entries_.size()};
  index_.emplace(name, id.index);
  Entry e;
  e.m = Matrix::Zero(value.rows(), value.cols());
  e.v = Matrix::Zero(value.rows(), value.cols());
  e.name = std::move(name);
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  return id;
}

std::optional<ParamId> ParamStore::find(std::string_view name) const
{
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return ParamId{it->second};
}

ParamId ParamStore::id(std::string_view name) const
{
  auto p = find(name);
  if (!p) throw NumericError("unknown parameter '" + std::string(name) + "'");
  return *p;
}

std::size_t ParamStore::scalar_count() const
{
  std::size_t n = 0;
  for (const auto & e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

namespace
{
bool same_bits(const Matrix & a, const Matrix & b)
{
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}
}  // namespace

bool ParamStore::identical(const ParamStore & other) const
{
  if (entries_.size() != other.entries_.size() || step_ != other.step_) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry & a = entries_[i];
    const Entry & b = other.entries_[i];
    if (a.name != b.name || !same_bits(a.value, b.value) || !same_bits(a.m, b.m) ||
        !same_bits(a.v, b.v)) {
      return false;
    }
  }
  return true;
}

GradBuffer::GradBuffer(const ParamStore & store)
{
  grads_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Matrix & v = store.value(ParamId{i});
    grads_.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

void GradBuffer::zero()
{
  for (auto & g : grads_) g.setZero();
}

void GradBuffer::add(const GradBuffer & other)
{
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
}

void GradBuffer::scale(double s)
{
  for (auto & g : grads_) g *= s;
}

double GradBuffer::global_norm() const
{
  double sq = 0.0;
  for (const auto & g : grads_) sq += g.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace jointcast::ad
