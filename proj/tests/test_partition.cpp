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

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"
#include "fairacq/partition.hpp"
#include "test_util.hpp"

namespace fairacq {
namespace {

// Isotropic blobs with unit variance around the given centers; `truth`
// receives each row's blob.
Dataset Blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob,
              std::uint64_t seed, std::vector<int>* truth = nullptr, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Example> ex;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      Example e;
      for (double c : centers[b]) e.features.push_back(scale * (c + nd(rng)));
      e.label = coin(rng) ? 1 : 0;
      e.sensitive = coin(rng) ? 1 : 0;
      e.id = static_cast<std::int64_t>(ex.size());
      ex.push_back(e);
      if (truth != nullptr) truth->push_back(static_cast<int>(b));
    }
  }
  return Dataset::from_examples(ex);
}

void ExpectValid(const Partitioning& part, const Dataset& pool) {
  ASSERT_EQ(part.assignment.size(), pool.size());
  EXPECT_EQ(std::accumulate(part.sizes.begin(), part.sizes.end(), std::size_t{0}), pool.size());
  std::set<std::size_t> seen;
  for (std::size_t k = 0; k < part.g(); ++k) {
    EXPECT_EQ(part.remaining[k].size(), part.sizes[k]);
    for (std::size_t r : part.remaining[k]) {
      EXPECT_TRUE(seen.insert(r).second);
      EXPECT_EQ(part.assignment[r], static_cast<int>(k));
    }
  }
  EXPECT_EQ(seen.size(), pool.size());
  const auto g = static_cast<Eigen::Index>(part.g());
  ASSERT_EQ(part.dist.rows(), g);
  for (Eigen::Index a = 0; a < g; ++a) {
    EXPECT_EQ(part.dist(a, a), 0.0);
    for (Eigen::Index b = 0; b < g; ++b) {
      EXPECT_EQ(part.dist(a, b), part.dist(b, a));
      EXPECT_GE(part.dist(a, b), 0.0);
      EXPECT_LE(part.dist(a, b), 1.0);
    }
  }
  if (g >= 2) EXPECT_DOUBLE_EQ(part.dist.maxCoeff(), 1.0);
  for (double v : part.delta_br) EXPECT_TRUE(std::isfinite(v));
}

TEST(FitGmm, RecoversTwoBlobs) {
  std::vector<int> truth;
  const Dataset pool = Blobs({{-5, -5}, {5, 5}}, 300, 1, &truth);
  const Partitioning part = fit_gmm(pool, 2, 7);
  ExpectValid(part, pool);
  ASSERT_EQ(part.g(), 2u);
  // Agreement up to label permutation.
  std::size_t same = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) same += part.assignment[i] == truth[i];
  const double agree = std::max(same, pool.size() - same) / static_cast<double>(pool.size());
  EXPECT_GE(agree, 0.99);
  // Centroids in the original feature space.
  const double c0 = part.centroids(0, 0), c1 = part.centroids(1, 0);
  EXPECT_NEAR(std::min(c0, c1), -5.0, 0.3);
  EXPECT_NEAR(std::max(c0, c1), 5.0, 0.3);
}

TEST(FitGmm, SingleComponentAndDeterminism) {
  const Dataset pool = Blobs({{0, 0, 0}}, 100, 2);
  const Partitioning one = fit_gmm(pool, 1, 3);
  ExpectValid(one, pool);
  EXPECT_EQ(one.g(), 1u);
  EXPECT_EQ(one.dist.rows(), 1);
  EXPECT_EQ(one.dist(0, 0), 0.0);
  EXPECT_NEAR(one.delta_br[0], base_rate_diff(pool), 1e-15);

  const Dataset blobs = Blobs({{-3, 0}, {3, 0}, {0, 4}}, 80, 4);
  const Partitioning a = fit_gmm(blobs, 3, 11);
  const Partitioning b = fit_gmm(blobs, 3, 11);
  EXPECT_EQ(a.assignment, b.assignment);
  ExpectValid(a, blobs);
}

TEST(FitGmm, Errors) {
  const Dataset pool = Blobs({{0, 0}}, 9, 1);
  EXPECT_THROW(fit_gmm(pool, 2, 0), DataError);  // needs 5 per component
  EXPECT_THROW(fit_gmm(pool, 0, 0), ConfigError);
  EXPECT_THROW(select_g(pool, 3, 2, 0), ConfigError);
}

TEST(FitGmm, RescalingFeaturesLeavesDistancesUnchanged) {
  const Dataset a = Blobs({{-4, 0}, {4, 1}, {0, 6}}, 60, 5);
  const Dataset b = Blobs({{-4, 0}, {4, 1}, {0, 6}}, 60, 5, nullptr, 37.5);
  const Partitioning pa = fit_gmm(a, 3, 2);
  const Partitioning pb = fit_gmm(b, 3, 2);
  EXPECT_EQ(pa.assignment, pb.assignment);
  EXPECT_LT((pa.dist - pb.dist).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SelectG, TwoBlobsChooseTwo) {
  const Dataset pool = Blobs({{-5, -5}, {5, 5}}, 300, 3);
  const GSelection sel = select_g(pool, 1, 6, 17);
  EXPECT_EQ(sel.g, 2u);
  EXPECT_EQ(sel.candidates.size(), 6u);
  EXPECT_EQ(select_g(pool, 2, 10, 17).g, 2u);
}

TEST(SelectG, ForcedRange) {
  const Dataset pool = Blobs({{-5, -5}, {5, 5}}, 100, 3);
  EXPECT_EQ(select_g(pool, 3, 3, 1).g, 3u);
}

TEST(SelectG, SingleGaussianPicksRangeMinimum) {
  const Dataset pool = Blobs({{0, 0, 0}}, 800, 8);
  EXPECT_EQ(select_g(pool, 2, 6, 5).g, 2u);
  EXPECT_EQ(select_g(pool, 1, 6, 5).g, 1u);
}

TEST(SelectG, BicValleyAroundTrueCount) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Dataset pool = Blobs({{-8, 0}, {8, 0}, {0, 10}}, 200, seed);
    const GSelection sel = select_g(pool, 1, 6, seed);
    ASSERT_EQ(sel.g, 3u) << "seed " << seed;
    // Decreasing to g = 3, increasing after.
    for (std::size_t i = 0; i + 1 < 3; ++i) EXPECT_GT(sel.bic[i], sel.bic[i + 1]);
    for (std::size_t i = 2; i + 1 < sel.bic.size(); ++i) EXPECT_LT(sel.bic[i], sel.bic[i + 1]);
  }
}

TEST(GmmBic, ParameterCount) {
  Partitioning part;
  part.sizes = {1, 1, 1};
  part.log_likelihood = -100.0;
  // g (2p + 1) - 1 = 3 * 9 - 1 = 26 parameters for p = 4.
  EXPECT_NEAR(gmm_bic(part, 50, 4), 200.0 + 26.0 * std::log(50.0), 1e-12);
}

Dataset WithAttribute(const std::vector<testing::Row>& rows, const std::vector<std::string>& levels,
                      const std::vector<int>& codes) {
  const Dataset base = testing::MakeData(rows);
  Dataset::Columns c;
  c.feature_names = base.feature_names();
  c.features.assign(base.features().begin(), base.features().end());
  c.labels.assign(base.labels().begin(), base.labels().end());
  c.sensitive.assign(base.sensitive().begin(), base.sensitive().end());
  c.ids.assign(base.ids().begin(), base.ids().end());
  c.attributes["state"] = Attribute{levels, codes};
  return Dataset(std::move(c));
}

TEST(PartitionByAttribute, HandCountedBaseRates) {
  // A: S=0 1/2 positive, S=1 1/2 -> 0.  B: S=0 1/2, S=1 2/2 -> -0.5.
  const Dataset pool = WithAttribute(
      {{{0.0}, 1, 0}, {{1.0}, 0, 0}, {{2.0}, 1, 1}, {{3.0}, 0, 1},
       {{10.0}, 1, 0}, {{11.0}, 0, 0}, {{12.0}, 1, 1}, {{13.0}, 1, 1}},
      {"A", "B"}, {0, 0, 0, 0, 1, 1, 1, 1});
  const Partitioning part = partition_by_attribute(pool, "state");
  ExpectValid(part, pool);
  ASSERT_EQ(part.g(), 2u);
  EXPECT_DOUBLE_EQ(part.delta_br[0], 0.0);
  EXPECT_DOUBLE_EQ(part.delta_br[1], -0.5);
  EXPECT_DOUBLE_EQ(part.centroids(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(part.centroids(1, 0), 11.5);
  EXPECT_DOUBLE_EQ(part.dist(0, 1), 1.0);
}

TEST(PartitionByAttribute, LevelCountsAndErrors) {
  std::vector<testing::Row> rows;
  std::vector<int> codes;
  for (int i = 0; i < 16; ++i) {
    rows.push_back({{double(i)}, i % 2, (i / 2) % 2});
    codes.push_back(i % 4);
  }
  const Dataset four = WithAttribute(rows, {"CA", "NY", "TX", "FL"}, codes);
  EXPECT_EQ(partition_by_attribute(four, "state").g(), 4u);

  const Dataset constant =
      WithAttribute(rows, {"CA", "NY"}, std::vector<int>(16, 1));
  const Partitioning one = partition_by_attribute(constant, "state");
  EXPECT_EQ(one.g(), 1u);
  EXPECT_EQ(one.sizes[0], 16u);

  EXPECT_THROW(partition_by_attribute(four, "county"), SchemaError);

  std::vector<testing::Row> many;
  std::vector<int> many_codes;
  std::vector<std::string> levels;
  for (int i = 0; i < 33; ++i) {
    many.push_back({{double(i)}, i % 2, (i / 2) % 2});
    many_codes.push_back(i);
    levels.push_back("L" + std::to_string(i));
  }
  EXPECT_THROW(partition_by_attribute(WithAttribute(many, levels, many_codes), "state"),
               DataError);
}

TEST(MakePartitioning, MissingGroupFallsBackToPoolRate) {
  const Dataset pool = testing::MakeData(
      {{{0.0}, 1, 0}, {{1.0}, 0, 1}, {{2.0}, 1, 1}, {{3.0}, 0, 0}, {{9.0}, 1, 1}, {{9.5}, 0, 1}});
  const Partitioning part = make_partitioning(pool, {0, 0, 0, 0, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(part.delta_br[0], 0.5 - 0.5);
  EXPECT_DOUBLE_EQ(part.delta_br[1], base_rate_diff(pool));
  EXPECT_THROW(make_partitioning(pool, {0, 0, 0, 0, 2, 1}, 2), DataError);
}

TEST(NormalizedDistances, Geometry) {
  Eigen::MatrixXd one(1, 2);
  one << 3, 4;
  EXPECT_EQ(normalized_distances(one), Eigen::MatrixXd::Zero(1, 1));

  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 3, 4;
  const Eigen::MatrixXd d2 = normalized_distances(two);
  EXPECT_EQ(d2(0, 1), 1.0);
  EXPECT_EQ(d2(1, 0), 1.0);

  Eigen::MatrixXd three(3, 1);
  three << 0, 1, 2;
  const Eigen::MatrixXd d3 = normalized_distances(three);
  EXPECT_DOUBLE_EQ(d3(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(d3(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(d3(0, 2), 1.0);

  Eigen::MatrixXd same(3, 2);
  same << 1, 1, 1, 1, 1, 1;
  EXPECT_EQ(normalized_distances(same), Eigen::MatrixXd::Zero(3, 3));
}

TEST(PartitioningJson, ExportsIdsAndMatrices) {
  const Dataset pool = Blobs({{-5, -5}, {5, 5}}, 20, 1);
  const Partitioning part = fit_gmm(pool, 2, 1);
  const nlohmann::json j = part.to_json(pool);
  EXPECT_EQ(j.at("g"), 2);
  EXPECT_EQ(j.at("ids").size(), pool.size());
  EXPECT_EQ(j.at("dist").size(), 2u);
  EXPECT_EQ(j.at("assignment").get<std::vector<int>>(), part.assignment);
}

}  // namespace
}  // namespace fairacq
