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

#ifndef JOINTCAST_ERROR_HPP_
#define JOINTCAST_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace jointcast
{

/// Failure category. The numeric values double as CLI exit codes.
enum class ErrorKind : int
{
  kUsage = 2,
  kIo = 3,
  kSchema = 4,
  kNumeric = 5,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class UsageError : public Error
{
public:
  explicit UsageError(const std::string & what) : Error(ErrorKind::kUsage, what) {}
};

class IoError : public Error
{
public:
  explicit IoError(const std::string & what) : Error(ErrorKind::kIo, what) {}
};

/// Malformed input file or a value that violates a type invariant.
class SchemaError : public Error
{
public:
  explicit SchemaError(const std::string & what) : Error(ErrorKind::kSchema, what) {}
};

/// NaN/inf encountered, shape mismatch, or any other numeric contract violation.
class NumericError : public Error
{
public:
  explicit NumericError(const std::string & what) : Error(ErrorKind::kNumeric, what) {}
};

const char * to_string(ErrorKind kind);

}  // namespace jointcast

#endif  // JOINTCAST_ERROR_HPP_
