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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace fairacq {

// Sensitive flag: 1 = privileged group, 0 = protected group.
inline constexpr int kProtected = 0;
inline constexpr int kPrivileged = 1;

struct Example {
  std::vector<double> features;
  int label = 0;
  int sensitive = 0;
  std::int64_t id = 0;
};

// A categorical column kept alongside the encoded features, e.g. for
// partitioning the pool by a declared attribute.
struct Attribute {
  std::vector<std::string> levels;
  std::vector<int> codes;  // one per row, index into levels
};

// Immutable, columnar collection of examples. Features are stored row-major
// so the SIMD kernels can stream over them.
class Dataset {
 public:
  struct Columns {
    std::vector<std::string> feature_names;
    std::string sensitive_name = "sensitive";
    std::string label_name = "label";
    // Coordinate of the sensitive attribute inside the feature vector.
    std::optional<std::size_t> sensitive_feature;
    std::vector<double> features;  // rows x feature_names.size()
    std::vector<int> labels;
    std::vector<int> sensitive;
    std::vector<std::int64_t> ids;
    std::map<std::string, Attribute> attributes;
  };

  Dataset() = default;
  // Validates every invariant; throws DataError on violation.
  explicit Dataset(Columns columns);

  static Dataset from_examples(std::span<const Example> examples,
                               std::vector<std::string> feature_names = {},
                               std::optional<std::size_t> sensitive_feature = {});

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return feature_names_.size(); }

  std::span<const double> features() const { return features_; }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim(), dim()};
  }
  std::span<const int> labels() const { return labels_; }
  std::span<const int> sensitive() const { return sensitive_; }
  std::span<const std::int64_t> ids() const { return ids_; }
  int label(std::size_t i) const { return labels_[i]; }
  int sensitive(std::size_t i) const { return sensitive_[i]; }
  std::int64_t id(std::size_t i) const { return ids_[i]; }
  Example example(std::size_t i) const;

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& sensitive_name() const { return sensitive_name_; }
  const std::string& label_name() const { return label_name_; }
  std::optional<std::size_t> sensitive_feature() const { return sensitive_feature_; }
  const std::map<std::string, Attribute>& attributes() const { return attributes_; }
  const Attribute* attribute(const std::string& name) const;

  // Rows in the given order; indices may not repeat ids.
  Dataset subset(std::span<const std::size_t> rows) const;
  // Rows of *this followed by rows of `other`. Attributes present in both
  // with identical levels are kept.
  Dataset concat(const Dataset& other) const;
  // Drops one feature coordinate (used to exclude the sensitive attribute).
  Dataset without_feature(std::size_t index) const;

 private:
  std::vector<std::string> feature_names_;
  std::string sensitive_name_ = "sensitive";
  std::string label_name_ = "label";
  std::optional<std::size_t> sensitive_feature_;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<int> sensitive_;
  std::vector<std::int64_t> ids_;
  std::map<std::string, Attribute> attributes_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct ColumnSpec {
  enum class Kind { kNumeric, kCategorical };
  enum class Encoding { kOneHot, kOrdinal };

  std::string name;
  Kind kind = Kind::kNumeric;
  Encoding encoding = Encoding::kOrdinal;
  std::vector<std::string> levels;  // categorical only; declared, not inferred
};

struct Schema {
  std::vector<ColumnSpec> features;
  std::string sensitive_column;
  std::vector<std::string> privileged_values;
  std::vector<std::string> protected_values;
  std::string label_column;
  std::vector<std::string> positive_values;
  std::vector<std::string> negative_values;
  // Append the sensitive flag as a feature when it is not listed in features.
  bool sensitive_as_feature = true;
  // Categorical columns retained as Attributes (levels declared here too).
  std::vector<ColumnSpec> attributes;
  // Rows containing any of these raw values, in any column, are dropped.
  std::vector<std::string> na_values;

  static Schema from_json(const nlohmann::json& j);
};

Schema load_schema(const std::filesystem::path& path);

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  std::array<int, 3> ratios{1, 4, 15};  // train : test : pool
  double bias = 0.25;                   // retention probability of protected positives in train
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  Dataset pool;
};

// Test and pool are uniform draws; train is the remainder with protected
// positives thinned by `bias`, so |train| <= its quota when bias < 1.
Split split(const Dataset& data, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  std::size_t n = 0;
  // Total feature dimension; the last coordinate is the sensitive flag and
  // the first p - 1 are Gaussian.
  std::size_t p = 2;
  double privileged_fraction = 0.5;  // P(S = 1)
  // means[s][y] has p - 1 entries.
  std::array<std::array<std::vector<double>, 2>, 2> means;
  std::vector<double> variances;  // p - 1 entries, shared by all cells
  std::array<double, 2> base_rates{0.5, 0.5};  // P(Y=1|S=0), P(Y=1|S=1)
  std::uint64_t seed = 0;

  void validate() const;

  // A hiring-style population: the same label signal and base rate in both
  // groups, so disparity comes only from a biased training split. The
  // sensitive flag is a feature.
  static SyntheticSpec hiring(std::size_t n, std::uint64_t seed);
};

Dataset synthesize(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Group statistics

struct GroupStats {
  // counts[s][y]
  std::array<std::array<std::size_t, 2>, 2> counts{};
  double rate_protected = 0.0;   // P(Y=1|S=0)
  double rate_privileged = 0.0;  // P(Y=1|S=1)
  double delta_br = 0.0;         // rate_protected - rate_privileged
};

GroupStats group_stats(const Dataset& data);

}  // namespace fairacq
