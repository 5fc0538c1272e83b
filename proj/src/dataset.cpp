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

#include "fairacq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "fairacq/errors.hpp"

namespace fairacq {

Dataset::Dataset(Columns c)
    : feature_names_(std::move(c.feature_names)),
      sensitive_name_(std::move(c.sensitive_name)),
      label_name_(std::move(c.label_name)),
      sensitive_feature_(c.sensitive_feature),
      features_(std::move(c.features)),
      labels_(std::move(c.labels)),
      sensitive_(std::move(c.sensitive)),
      ids_(std::move(c.ids)),
      attributes_(std::move(c.attributes)) {
  const std::size_t n = labels_.size();
  const std::size_t p = feature_names_.size();
  if (sensitive_.size() != n || ids_.size() != n || features_.size() != n * p) {
    throw DataError("dataset columns have inconsistent lengths");
  }
  if (sensitive_feature_ && *sensitive_feature_ >= p) {
    throw DataError("sensitive feature index out of range");
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw EncodingError("label must be 0 or 1");
    }
    if (sensitive_[i] != 0 && sensitive_[i] != 1) {
      throw EncodingError("sensitive flag must be 0 or 1");
    }
  }
  std::unordered_set<std::int64_t> seen;
  seen.reserve(n);
  for (std::int64_t id : ids_) {
    if (!seen.insert(id).second) {
      throw DataError("duplicate example id " + std::to_string(id));
    }
  }
  for (const auto& [name, attr] : attributes_) {
    if (attr.codes.size() != n) {
      throw DataError("attribute '" + name + "' has wrong length");
    }
    for (int code : attr.codes) {
      if (code < 0 || static_cast<std::size_t>(code) >= attr.levels.size()) {
        throw DataError("attribute '" + name + "' code out of range");
      }
    }
  }
}

Dataset Dataset::from_examples(std::span<const Example> examples,
                               std::vector<std::string> feature_names,
                               std::optional<std::size_t> sensitive_feature) {
  Columns c;
  const std::size_t p = examples.empty() ? feature_names.size()
                                         : examples.front().features.size();
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < p; ++j) feature_names.push_back("x" + std::to_string(j));
  }
  if (feature_names.size() != p) {
    throw DataError("feature name count does not match example dimension");
  }
  c.feature_names = std::move(feature_names);
  c.sensitive_feature = sensitive_feature;
  c.features.reserve(examples.size() * p);
  for (const Example& e : examples) {
    if (e.features.size() != p) throw DataError("examples differ in dimension");
    c.features.insert(c.features.end(), e.features.begin(), e.features.end());
    c.labels.push_back(e.label);
    c.sensitive.push_back(e.sensitive);
    c.ids.push_back(e.id);
  }
  return Dataset(std::move(c));
}

Example Dataset::example(std::size_t i) const {
  auto r = row(i);
  return Example{{r.begin(), r.end()}, labels_[i], sensitive_[i], ids_[i]};
}

const Attribute* Dataset::attribute(const std::string& name) const {
  auto it = attributes_.find(name);
  return it == attributes_.end() ? nullptr : &it->second;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Columns c;
  c.feature_names = feature_names_;
  c.sensitive_name = sensitive_name_;
  c.label_name = label_name_;
  c.sensitive_feature = sensitive_feature_;
  const std::size_t p = dim();
  c.features.reserve(rows.size() * p);
  for (std::size_t r : rows) {
    if (r >= size()) throw DataError("subset row out of range");
    auto x = row(r);
    c.features.insert(c.features.end(), x.begin(), x.end());
    c.labels.push_back(labels_[r]);
    c.sensitive.push_back(sensitive_[r]);
    c.ids.push_back(ids_[r]);
  }
  for (const auto& [name, attr] : attributes_) {
    Attribute a{attr.levels, {}};
    a.codes.reserve(rows.size());
    for (std::size_t r : rows) a.codes.push_back(attr.codes[r]);
    c.attributes.emplace(name, std::move(a));
  }
  return Dataset(std::move(c));
}

Dataset Dataset::concat(const Dataset& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  if (other.dim() != dim()) throw DataError("concat: dimension mismatch");
  Columns c;
  c.feature_names = feature_names_;
  c.sensitive_name = sensitive_name_;
  c.label_name = label_name_;
  c.sensitive_feature = sensitive_feature_;
  c.features = features_;
  c.features.insert(c.features.end(), other.features_.begin(), other.features_.end());
  c.labels = labels_;
  c.labels.insert(c.labels.end(), other.labels_.begin(), other.labels_.end());
  c.sensitive = sensitive_;
  c.sensitive.insert(c.sensitive.end(), other.sensitive_.begin(), other.sensitive_.end());
  c.ids = ids_;
  c.ids.insert(c.ids.end(), other.ids_.begin(), other.ids_.end());
  for (const auto& [name, attr] : attributes_) {
    const Attribute* o = other.attribute(name);
    if (o == nullptr || o->levels != attr.levels) continue;
    Attribute a = attr;
    a.codes.insert(a.codes.end(), o->codes.begin(), o->codes.end());
    c.attributes.emplace(name, std::move(a));
  }
  return Dataset(std::move(c));
}

Dataset Dataset::without_feature(std::size_t index) const {
  if (index >= dim()) throw DataError("without_feature: index out of range");
  Columns c;
  c.feature_names = feature_names_;
  c.feature_names.erase(c.feature_names.begin() + static_cast<std::ptrdiff_t>(index));
  c.sensitive_name = sensitive_name_;
  c.label_name = label_name_;
  if (sensitive_feature_ && *sensitive_feature_ != index) {
    c.sensitive_feature = *sensitive_feature_ > index ? *sensitive_feature_ - 1
                                                      : *sensitive_feature_;
  }
  const std::size_t p = dim();
  c.features.reserve(size() * (p - 1));
  for (std::size_t i = 0; i < size(); ++i) {
    auto x = row(i);
    for (std::size_t j = 0; j < p; ++j) {
      if (j != index) c.features.push_back(x[j]);
    }
  }
  c.labels = labels_;
  c.sensitive = sensitive_;
  c.ids = ids_;
  c.attributes = attributes_;
  return Dataset(std::move(c));
}

// ---------------------------------------------------------------------------

namespace {

bool HasBothGroups(const Dataset& d) {
  bool g0 = false, g1 = false;
  for (int s : d.sensitive()) (s == kPrivileged ? g1 : g0) = true;
  return g0 && g1;
}

}  // namespace

Split split(const Dataset& data, const SplitSpec& spec) {
  for (int r : spec.ratios) {
    if (r <= 0) throw ConfigError("split ratios must be positive");
  }
  if (!(spec.bias > 0.0 && spec.bias <= 1.0)) {
    throw ConfigError("split bias must lie in (0, 1]");
  }
  const std::size_t units =
      static_cast<std::size_t>(spec.ratios[0] + spec.ratios[1] + spec.ratios[2]);
  const std::size_t n = data.size();
  if (n < 20 * units) {
    throw SplitError("dataset too small to split: " + std::to_string(n) +
                     " rows, need at least " + std::to_string(20 * units));
  }
  const std::size_t n_train = n * static_cast<std::size_t>(spec.ratios[0]) / units;
  const std::size_t n_test = n * static_cast<std::size_t>(spec.ratios[1]) / units;
  const std::size_t n_pool = n - n_train - n_test;

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                                order.begin() + static_cast<std::ptrdiff_t>(n_test + n_pool));
  std::vector<std::size_t> train;
  train.reserve(n_train);
  std::bernoulli_distribution keep(spec.bias);
  for (auto it = order.begin() + static_cast<std::ptrdiff_t>(n_test + n_pool);
       it != order.end() && train.size() < n_train; ++it) {
    const bool protected_positive =
        data.sensitive(*it) == kProtected && data.label(*it) == 1;
    if (!protected_positive || keep(rng)) train.push_back(*it);
  }

  Split out{data.subset(train), data.subset(test), data.subset(pool)};
  if (!HasBothGroups(out.train) || !HasBothGroups(out.test) ||
      !HasBothGroups(out.pool)) {
    throw SplitError("a split part is missing one sensitive group");
  }
  return out;
}

// ---------------------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (p < 1) throw ConfigError("synthetic p must be >= 1");
  if (!(privileged_fraction >= 0.0 && privileged_fraction <= 1.0)) {
    throw ConfigError("privileged_fraction must lie in [0, 1]");
  }
  for (double r : base_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("base rates must lie in [0, 1]");
  }
  if (variances.size() != p - 1) throw ConfigError("variances must have p - 1 entries");
  for (double v : variances) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("variances must be > 0");
  }
  for (const auto& by_label : means) {
    for (const auto& m : by_label) {
      if (m.size() != p - 1) throw ConfigError("means must have p - 1 entries");
    }
  }
}

SyntheticSpec SyntheticSpec::hiring(std::size_t n, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.p = 6;
  s.privileged_fraction = 0.6;
  s.base_rates = {0.45, 0.45};
  s.variances = {1.0, 1.0, 1.0, 1.0, 1.0};
  // Label signal is identical across groups; the second coordinate carries a
  // small group shift so the pool clusters are not pure in S.
  s.means[0][0] = {-0.6, -0.4, 0.0, -0.3, 0.0};
  s.means[0][1] = {0.6, -0.4, 0.5, 0.3, 0.0};
  s.means[1][0] = {-0.6, 0.4, 0.0, -0.3, 0.0};
  s.means[1][1] = {0.6, 0.4, 0.5, 0.3, 0.0};
  s.seed = seed;
  return s;
}

Dataset synthesize(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.n == 0) throw DataError("synthetic dataset must be non-empty");
  const std::size_t q = spec.p - 1;
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution group(spec.privileged_fraction);
  std::array<std::bernoulli_distribution, 2> label{
      std::bernoulli_distribution(spec.base_rates[0]),
      std::bernoulli_distribution(spec.base_rates[1])};
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sd(q);
  for (std::size_t j = 0; j < q; ++j) sd[j] = std::sqrt(spec.variances[j]);

  Dataset::Columns c;
  for (std::size_t j = 0; j < q; ++j) c.feature_names.push_back("x" + std::to_string(j));
  c.feature_names.push_back("s");
  c.sensitive_name = "s";
  c.label_name = "y";
  c.sensitive_feature = q;
  c.features.reserve(spec.n * spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int s = group(rng) ? 1 : 0;
    const int y = label[static_cast<std::size_t>(s)](rng) ? 1 : 0;
    const auto& mean = spec.means[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < q; ++j) c.features.push_back(mean[j] + sd[j] * normal(rng));
    c.features.push_back(static_cast<double>(s));
    c.labels.push_back(y);
    c.sensitive.push_back(s);
    c.ids.push_back(static_cast<std::int64_t>(i));
  }
  return Dataset(std::move(c));
}

// ---------------------------------------------------------------------------

GroupStats group_stats(const Dataset& data) {
  GroupStats g;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ++g.counts[static_cast<std::size_t>(data.sensitive(i))]
              [static_cast<std::size_t>(data.label(i))];
  }
  const std::size_t n0 = g.counts[0][0] + g.counts[0][1];
  const std::size_t n1 = g.counts[1][0] + g.counts[1][1];
  if (n0 == 0 || n1 == 0) {
    throw GroupError("group statistics need both sensitive groups");
  }
  g.rate_protected = static_cast<double>(g.counts[0][1]) / static_cast<double>(n0);
  g.rate_privileged = static_cast<double>(g.counts[1][1]) / static_cast<double>(n1);
  g.delta_br = g.rate_protected - g.rate_privileged;
  return g;
}

}  // namespace fairacq
