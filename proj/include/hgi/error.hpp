// Copyright 2026 The hginet-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hgi {

// Base of every error thrown by the library. The C API maps the concrete
// type onto a status code, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (wrong mode, bad argument).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Model or training configuration that violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `offset` is the byte position where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Checkpoint content that does not match the model it is loaded into.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (diverged training).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inputs that are individually valid but do not form a usable data set
// (unmatched file names, empty directories, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgi
