// Copyright 2026 The fairacq Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairacq {

// Exception hierarchy. The CLI maps the three top-level families onto exit
// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// A declared column is absent from the input.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// A label or sensitive value does not map onto {0,1}.
class EncodingError : public DataError {
 public:
  using DataError::DataError;
};

class RowError : public DataError {
 public:
  RowError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class SplitError : public DataError {
 public:
  using DataError::DataError;
};

// A statistic needs both sensitive groups (or both labels) and one is absent.
class GroupError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Newton solve or Hessian factorization failed.
class OptimizationError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace fairacq
