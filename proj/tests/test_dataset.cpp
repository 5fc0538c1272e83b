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
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fairacq/dataset.hpp"
#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"
#include "test_util.hpp"

namespace fairacq {
namespace {

using testing::MakeData;
using testing::Row;

const std::filesystem::path kData = FAIRACQ_TEST_DATA;

std::set<std::int64_t> Ids(const Dataset& d) { return {d.ids().begin(), d.ids().end()}; }

TEST(LoadCsv, PassesNumericValuesThroughVerbatim) {
  const Dataset d = load_csv(kData / "tiny.csv", load_schema(kData / "tiny_schema.json"));
  ASSERT_EQ(d.size(), 4u);
  ASSERT_EQ(d.dim(), 2u);
  const double expected[4][2] = {{1.5, 60.25}, {1.8, 82.0}, {1.62, -35.0}, {2.0, 0.0}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(d.row(i)[0], expected[i][0]);
    EXPECT_EQ(d.row(i)[1], expected[i][1]);
    EXPECT_EQ(d.id(i), static_cast<std::int64_t>(i));
  }
  EXPECT_EQ(std::vector<int>(d.labels().begin(), d.labels().end()), (std::vector<int>{1, 0, 0, 1}));
  EXPECT_EQ(std::vector<int>(d.sensitive().begin(), d.sensitive().end()),
            (std::vector<int>{0, 1, 0, 1}));
  EXPECT_FALSE(d.sensitive_feature().has_value());
}

TEST(LoadCsv, HeaderOnlyAndEmptyFilesAreDataErrors) {
  const Schema schema = load_schema(kData / "tiny_schema.json");
  EXPECT_THROW(load_csv(kData / "header_only.csv", schema), DataError);
  EXPECT_THROW(load_csv(kData / "empty.csv", schema), DataError);
  EXPECT_THROW(load_csv(kData / "does_not_exist.csv", schema), DataError);
}

TEST(LoadCsv, ErrorKinds) {
  const Schema schema = load_schema(kData / "tiny_schema.json");
  EXPECT_THROW(load_csv(kData / "missing_column.csv", schema), SchemaError);
  EXPECT_THROW(load_csv(kData / "bad_label.csv", schema), EncodingError);
  try {
    load_csv(kData / "bad_number.csv", schema);
    FAIL() << "expected RowError";
  } catch (const RowError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(LoadCsv, CategoricalEncodingAttributesAndMissingValues) {
  const Dataset d =
      load_csv(kData / "categorical.csv", load_schema(kData / "categorical_schema.json"));
  ASSERT_EQ(d.size(), 3u);  // the '?' row is dropped
  ASSERT_EQ(d.dim(), 5u);   // 3 one-hot + score + appended sex
  EXPECT_EQ(d.feature_names()[0], "city=Paris");
  EXPECT_EQ(d.feature_names()[4], "sex");
  ASSERT_TRUE(d.sensitive_feature().has_value());
  EXPECT_EQ(*d.sensitive_feature(), 4u);
  const double row1[] = {0, 1, 0, 2, 1};
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(d.row(1)[j], row1[j]);
  const Attribute* city = d.attribute("city");
  ASSERT_NE(city, nullptr);
  EXPECT_EQ(city->codes, (std::vector<int>{0, 1, 2}));
}

TEST(LoadCsv, SchemaValidation) {
  EXPECT_THROW(Schema::from_json(nlohmann::json::parse(R"({"features": []})")), ConfigError);
  EXPECT_THROW(Schema::from_json(nlohmann::json::parse(R"({
      "features": [{"name": "c", "type": "categorical"}],
      "sensitive": {"column": "s", "privileged": "1", "protected": "0"},
      "label": {"column": "y", "positive": "1", "negative": "0"}})")),
               ConfigError);
}

// Adult-format file: the usual column layout with '?' for missing values.
TEST(LoadCsv, AdultFormatEncodesEightFeatures) {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "fairacq_adult_format.csv";
  {
    std::ofstream out(path);
    out << "age,workclass,fnlwgt,education,educational-num,marital-status,occupation,"
           "relationship,race,gender_raw,capital-gain,capital-loss,hours-per-week,"
           "native-country,sex,income\n";
    std::mt19937_64 rng(7);
    const char* races[] = {"White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"};
    const char* marital[] = {"Married-civ-spouse", "Never-married", "Divorced", "Widowed"};
    std::uniform_int_distribution<int> age(17, 90), edu(1, 16), hours(1, 99), pick(0, 3);
    std::bernoulli_distribution male(0.67), rich_m(0.31), rich_f(0.11);
    for (int i = 0; i < 45222 + 150; ++i) {
      const bool m = male(rng);
      const bool missing = i % 302 == 5 && i / 302 < 150;
      out << age(rng) << ",Private,12345,Bachelors," << edu(rng) << ','
          << marital[pick(rng)] << ',' << (missing ? "?" : "Sales") << ",Husband,"
          << races[pick(rng)] << ",x," << (i % 50 == 0 ? 5000 : 0) << ",0," << hours(rng)
          << ",United-States," << (m ? "Male" : "Female") << ','
          << ((m ? rich_m(rng) : rich_f(rng)) ? ">50K" : "<=50K") << '\n';
    }
  }
  // '?' only appears in an unused column, as in the public file.
  const Schema schema =
      load_schema(std::filesystem::path(FAIRACQ_CONFIG_DIR) / "adult_schema.json");
  const Dataset d = load_csv(path, schema);
  std::filesystem::remove(path);
  EXPECT_EQ(d.size(), 45222u);
  EXPECT_EQ(d.dim(), 8u);
  EXPECT_EQ(d.feature_names().back(), "sex");
  EXPECT_LT(base_rate_diff(d), 0.0);
}

TEST(DatasetInvariants, Rejected) {
  EXPECT_THROW(MakeData({{{1.0}, 2, 0}}), EncodingError);
  EXPECT_THROW(MakeData({{{1.0}, 1, 3}}), EncodingError);
  EXPECT_THROW(MakeData({{{NAN}, 1, 0}}), DataError);
  EXPECT_THROW(MakeData({{{1.0}, 1, 0}, {{1.0, 2.0}, 0, 1}}), DataError);
  std::vector<Example> dup{{{1.0}, 1, 0, 5}, {{2.0}, 0, 1, 5}};
  EXPECT_THROW(Dataset::from_examples(dup), DataError);
}

TEST(DatasetOps, SubsetConcatAndFeatureDrop) {
  const Dataset d = MakeData({{{1, 10}, 1, 0}, {{2, 20}, 0, 1}, {{3, 30}, 1, 1}});
  const std::vector<std::size_t> rows{2, 0};
  const Dataset s = d.subset(rows);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.id(0), 2);
  EXPECT_EQ(s.row(1)[1], 10.0);
  const Dataset other = MakeData({{{4, 40}, 0, 0}}, 100);
  const Dataset c = d.concat(other);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_EQ(c.id(3), 100);
  EXPECT_THROW(d.concat(d), DataError);  // duplicate ids
  const Dataset w = d.without_feature(0);
  EXPECT_EQ(w.dim(), 1u);
  EXPECT_EQ(w.row(2)[0], 30.0);
}

TEST(Split, ExactSizesDisjointAndDeterministic) {
  SyntheticSpec spec = SyntheticSpec::hiring(20000, 3);
  const Dataset data = synthesize(spec);
  const Split a = split(data, {{1, 4, 15}, 1.0, 11});
  EXPECT_EQ(a.train.size(), 1000u);
  EXPECT_EQ(a.test.size(), 4000u);
  EXPECT_EQ(a.pool.size(), 15000u);
  std::set<std::int64_t> all = Ids(a.train);
  for (std::int64_t id : a.test.ids()) EXPECT_TRUE(all.insert(id).second);
  for (std::int64_t id : a.pool.ids()) EXPECT_TRUE(all.insert(id).second);
  const std::set<std::int64_t> source = Ids(data);
  for (std::int64_t id : all) EXPECT_TRUE(source.contains(id));

  const Split b = split(data, {{1, 4, 15}, 1.0, 11});
  EXPECT_EQ(Ids(a.train), Ids(b.train));
  EXPECT_EQ(Ids(a.pool), Ids(b.pool));
  const Split c = split(data, {{1, 4, 15}, 1.0, 12});
  EXPECT_NE(Ids(a.pool), Ids(c.pool));
}

TEST(Split, UnbiasedTrainKeepsGroupProportions) {
  const Dataset data = synthesize(SyntheticSpec::hiring(20000, 5));
  const Split s = split(data, {{1, 4, 15}, 1.0, 2});
  double q = 0.0;
  for (int v : data.sensitive()) q += v;
  q /= static_cast<double>(data.size());
  double qt = 0.0;
  for (int v : s.train.sensitive()) qt += v;
  qt /= static_cast<double>(s.train.size());
  const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(s.train.size()));
  EXPECT_LT(std::abs(qt - q), 3 * sigma);
}

TEST(Split, BiasThinsProtectedPositives) {
  // Fraction of rows that are protected positives, train vs pool.
  auto joint = [](const Dataset& d) {
    const GroupStats g = group_stats(d);
    return static_cast<double>(g.counts[0][1]) / static_cast<double>(d.size());
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    const Dataset data = synthesize(SyntheticSpec::hiring(20000, seed));
    const Split s = split(data, {{1, 4, 15}, 0.25, seed});
    EXPECT_NEAR(joint(s.train), 0.25 * joint(s.pool), 0.05);
    // Count-based: about a quarter of the expected protected positives survive.
    const double expected = joint(s.pool) * 1000.0;
    const double kept = static_cast<double>(group_stats(s.train).counts[0][1]);
    EXPECT_NEAR(kept / expected, 0.25, 0.07);
    EXPECT_LT(s.train.size(), 1000u);
  }
}

TEST(Split, Errors) {
  const Dataset small = testing::RandomLogistic(300, 3, 1);
  EXPECT_THROW(split(small, {{1, 4, 15}, 1.0, 0}), SplitError);  // needs 400
  EXPECT_THROW(split(small, {{1, 4, 0}, 1.0, 0}), ConfigError);
  std::vector<Row> rows;
  for (int i = 0; i < 500; ++i) rows.push_back({{double(i)}, i % 2, 1});
  EXPECT_THROW(split(MakeData(rows), {{1, 4, 15}, 1.0, 0}), SplitError);
}

TEST(Synthesize, BaseRatesAndDeterminism) {
  SyntheticSpec spec = SyntheticSpec::hiring(20000, 9);
  spec.base_rates = {0.1, 0.5};
  const Dataset d = synthesize(spec);
  const GroupStats g = group_stats(d);
  // Direct count on the sample.
  std::size_t pos[2] = {0, 0}, tot[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    ++tot[d.sensitive(i)];
    pos[d.sensitive(i)] += d.label(i);
  }
  const double r0 = double(pos[0]) / double(tot[0]), r1 = double(pos[1]) / double(tot[1]);
  EXPECT_NEAR(r0, 0.1, 0.02);
  EXPECT_NEAR(r1, 0.5, 0.02);
  EXPECT_NEAR(g.delta_br, r0 - r1, 1e-12);
  EXPECT_NEAR(base_rate_diff(d), -0.4, 0.02);

  spec.base_rates = {0.2, 0.2};
  EXPECT_NEAR(base_rate_diff(synthesize(spec)), 0.0, 0.02);

  const Dataset again = synthesize(SyntheticSpec::hiring(500, 4));
  const Dataset twice = synthesize(SyntheticSpec::hiring(500, 4));
  EXPECT_TRUE(std::equal(again.features().begin(), again.features().end(),
                         twice.features().begin()));
  EXPECT_TRUE(std::equal(again.labels().begin(), again.labels().end(), twice.labels().begin()));

  spec.n = 0;
  EXPECT_THROW(synthesize(spec), DataError);
  spec.n = 10;
  spec.variances[0] = 0.0;
  EXPECT_THROW(synthesize(spec), ConfigError);
}

TEST(GroupStats, HandCounts) {
  const Dataset d = MakeData({{{0}, 1, 0}, {{0}, 0, 0}, {{0}, 1, 1}, {{0}, 1, 1}});
  const GroupStats g = group_stats(d);
  EXPECT_EQ(g.counts[0][1], 1u);
  EXPECT_EQ(g.counts[0][0], 1u);
  EXPECT_EQ(g.counts[1][1], 2u);
  EXPECT_EQ(g.counts[1][0], 0u);
  EXPECT_DOUBLE_EQ(g.delta_br, -0.5);

  const Dataset balanced = MakeData({{{0}, 1, 0}, {{0}, 0, 0}, {{0}, 1, 1}, {{0}, 0, 1}});
  EXPECT_DOUBLE_EQ(group_stats(balanced).delta_br, 0.0);
  EXPECT_THROW(group_stats(MakeData({{{0}, 1, 1}, {{0}, 0, 1}})), GroupError);
}

}  // namespace
}  // namespace fairacq
