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

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"
#include "fairacq/harness.hpp"
#include "test_util.hpp"

namespace fairacq {

void PrintTo(Method m, std::ostream* os) { *os << method_name(m); }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Fixture {
  Split parts;
  ExperimentConfig config;
};

Fixture Small(std::uint64_t seed = 4, std::size_t n = 3000) {
  Fixture f;
  f.config.data.synthetic = SyntheticSpec::hiring(n, seed);
  f.config.seed = seed;
  f.parts = split(synthesize(*f.config.data.synthetic), {{1, 4, 15}, 0.25, seed});
  f.config.bandit.tau = 0.0;
  return f;
}

std::set<std::int64_t> IdSet(const Dataset& d) { return {d.ids().begin(), d.ids().end()}; }

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fairacq_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Methods, NamesRoundTrip) {
  for (const char* name : {"random", "entropy", "inf", "autodata", "datasift", "datasift-inf"}) {
    EXPECT_EQ(method_name(parse_method(name)), name);
  }
  EXPECT_THROW(parse_method("shapley"), ConfigError);
  EXPECT_TRUE(is_bandit_method(Method::kDataSift));
  EXPECT_FALSE(is_bandit_method(Method::kInf));
}

class EveryMethod : public ::testing::TestWithParam<Method> {};

TEST_P(EveryMethod, AcquiresDistinctPoolIdsWithinBudget) {
  Fixture f = Small();
  f.config.method = GetParam();
  const Partitioning part = fit_gmm(f.parts.pool, 3, 1);
  const RunSummary s = run_method(f.parts.train, f.parts.test, f.parts.pool, &part, f.config);
  const std::set<std::int64_t> pool = IdSet(f.parts.pool);
  const std::set<std::int64_t> train = IdSet(f.parts.train);
  std::set<std::int64_t> seen;
  for (std::int64_t id : s.acquired_ids) {
    EXPECT_TRUE(seen.insert(id).second);
    EXPECT_TRUE(pool.contains(id));
    EXPECT_FALSE(train.contains(id));
  }
  EXPECT_LE(s.acquired, s.budget);
  EXPECT_EQ(s.budget, (f.parts.pool.size() * 2 + 9) / 10);
  EXPECT_LE(s.accepted_batches, s.budget / s.batch_size);
  EXPECT_LE(s.iterations, (f.parts.pool.size() + s.batch_size - 1) / s.batch_size);
  EXPECT_EQ(s.checkpoints.size(), 11u);
  EXPECT_EQ(s.method, method_name(GetParam()));
  if (!is_bandit_method(GetParam())) {
    EXPECT_EQ(s.acquired, s.budget / s.batch_size * s.batch_size);
    EXPECT_EQ(s.stop_reason, "budget");
  }
}

TEST_P(EveryMethod, BudgetOfOneBatch) {
  Fixture f = Small();
  f.config.method = GetParam();
  f.config.bandit.budget = 20;
  f.config.bandit.batch_size = 20;
  const Partitioning part = fit_gmm(f.parts.pool, 2, 1);
  const RunSummary s = run_method(f.parts.train, f.parts.test, f.parts.pool, &part, f.config);
  EXPECT_LE(s.acquired, 20u);
  if (!is_bandit_method(GetParam())) EXPECT_EQ(s.iterations, 1u);
  if (s.accepted_batches == 1) EXPECT_EQ(s.acquired, 20u);
}

INSTANTIATE_TEST_SUITE_P(All, EveryMethod,
                         ::testing::Values(Method::kRandom, Method::kEntropy, Method::kInf,
                                           Method::kAutoData, Method::kDataSift,
                                           Method::kDataSiftInf),
                         [](const auto& info) {
                           std::string n = method_name(info.param);
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Entropy, FirstBatchIsMostUncertainWithIdTies) {
  Fixture f = Small();
  const RunSummary s = run_entropy(f.parts.train, f.parts.test, f.parts.pool, f.config);
  // Independent ranking from the initial model.
  const TrainedModel m = train(f.parts.train, f.config.model);
  std::vector<std::pair<double, std::int64_t>> ranked;
  for (std::size_t i = 0; i < f.parts.pool.size(); ++i) {
    const double p = predict_proba(m, f.parts.pool.row(i));
    const double h = p <= 0.0 || p >= 1.0
                         ? 0.0
                         : -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
    ranked.push_back({-h, f.parts.pool.id(i)});
  }
  std::sort(ranked.begin(), ranked.end());
  ASSERT_FALSE(s.trace.empty());
  const std::vector<std::int64_t>& first = s.trace.front().batch_ids;
  ASSERT_EQ(first.size(), s.batch_size);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i], ranked[i].second);
}

TEST(Entropy, TiesBreakById) {
  // Identical rows give identical entropy; the lowest ids go first.
  std::vector<Example> pool;
  for (int i = 0; i < 10; ++i) pool.push_back({{0.5, 1.0}, i % 2, (i / 2) % 2, 100 - i});
  const Dataset train = testing::RandomLogistic(60, 2, 3, 1.0, 1000);
  const Dataset test = testing::RandomLogistic(60, 2, 4, 1.0, 2000);
  ExperimentConfig cfg;
  cfg.bandit.budget = 4;
  cfg.bandit.batch_size = 2;
  const RunSummary s = run_entropy(train, test, Dataset::from_examples(pool), cfg);
  EXPECT_EQ(s.trace[0].batch_ids, (std::vector<std::int64_t>{91, 92}));
  EXPECT_EQ(s.trace[1].batch_ids, (std::vector<std::int64_t>{93, 94}));
}

TEST(Inf, FirstBatchFollowsRegressorOrder) {
  Fixture f = Small();
  const RunSummary s = run_inf(f.parts.train, f.parts.test, f.parts.pool, f.config);
  const TrainedModel m = train(f.parts.train, f.config.model);
  const FairnessInfluence fi(m, f.parts.train, f.parts.test);
  const InfluenceRegressor reg =
      fit_influence_regressor(f.parts.train, fi.score_all(f.parts.train), f.config.regressor);
  std::vector<std::pair<double, std::int64_t>> ranked;
  for (std::size_t i = 0; i < f.parts.pool.size(); ++i) {
    ranked.push_back({-reg.predict(f.parts.pool.row(i), f.parts.pool.label(i),
                                   f.parts.pool.sensitive(i)),
                      f.parts.pool.id(i)});
  }
  std::sort(ranked.begin(), ranked.end());
  std::size_t k = 0;
  for (const IterationRecord& rec : s.trace) {
    for (std::int64_t id : rec.batch_ids) EXPECT_EQ(id, ranked[k++].second);
  }
  EXPECT_EQ(k, s.acquired);
}

TEST(Inf, MatchesDataSiftInfWithOnePartition) {
  Fixture f = Small();
  const Partitioning one = make_partitioning(
      f.parts.pool, std::vector<int>(f.parts.pool.size(), 0), 1);
  const RunSummary inf = run_inf(f.parts.train, f.parts.test, f.parts.pool, f.config);
  const RunSummary dsi =
      run_datasift_inf(f.parts.train, f.parts.test, f.parts.pool, one, f.config);
  ASSERT_FALSE(dsi.trace.empty());
  // Both propose the same top batch; they agree for as long as nothing is
  // rejected.
  for (std::size_t i = 0; i < std::min(inf.trace.size(), dsi.trace.size()); ++i) {
    EXPECT_EQ(inf.trace[i].batch_ids, dsi.trace[i].batch_ids) << "iteration " << i;
    EXPECT_EQ(inf.trace[i].candidate_parity, dsi.trace[i].candidate_parity);
    if (!dsi.trace[i].accepted) break;
  }
}

TEST(AutoData, EqualsDataSiftWhenBaseRatesVanish) {
  Fixture f = Small();
  Partitioning part = fit_gmm(f.parts.pool, 3, 2);
  part.delta_br.assign(part.g(), 0.0);
  const RunSummary a = run_autodata(f.parts.train, f.parts.test, f.parts.pool, part, f.config);
  const RunSummary d = run_datasift(f.parts.train, f.parts.test, f.parts.pool, part, f.config);
  ASSERT_EQ(a.trace.size(), d.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].arm, d.trace[i].arm);
    EXPECT_EQ(a.trace[i].batch_ids, d.trace[i].batch_ids);
    EXPECT_EQ(a.trace[i].accepted, d.trace[i].accepted);
    EXPECT_EQ(a.trace[i].candidate_parity, d.trace[i].candidate_parity);
  }
  EXPECT_EQ(a.final_parity, d.final_parity);
  // With distinct base rates the two rewards differ but autodata's rewards
  // follow the distance-only form.
  EXPECT_DOUBLE_EQ(compute_rewards(0.1, 0, part, RewardVariant::kDistanceOnly)[0], 0.1);
}

TEST(BruteForce, EnumeratesEveryPair) {
  const Dataset base = testing::RandomLogistic(40, 2, 5, 2.0);
  const Dataset test = testing::RandomLogistic(100, 2, 6, 2.0, 1000);
  const Dataset pool = testing::RandomLogistic(8, 2, 7, 0.0, 5000);
  const TrainConfig cfg;
  const BruteForceResult r = brute_force_best_batch(base, test, pool, 2, cfg);
  EXPECT_EQ(r.evaluated, 28u);
  ASSERT_EQ(r.ids.size(), 2u);
  // Independent enumeration.
  double best = 2.0;
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = a + 1; b < 8; ++b) {
      const std::vector<std::size_t> rows{a, b};
      const double p = std::abs(
          demographic_parity(train(base.concat(pool.subset(rows)), cfg), test).parity);
      best = std::min(best, p);
    }
  }
  EXPECT_DOUBLE_EQ(std::abs(r.parity), best);

  const BruteForceResult all = brute_force_best_batch(base, test, pool, 8, cfg);
  EXPECT_EQ(all.evaluated, 1u);
  EXPECT_EQ(all.ids.size(), 8u);
}

TEST(Traces, ByteIdenticalAcrossRuns) {
  for (Method m : {Method::kRandom, Method::kDataSift, Method::kDataSiftInf}) {
    ExperimentConfig cfg;
    cfg.data.synthetic = SyntheticSpec::hiring(2000, 0);
    cfg.method = m;
    cfg.seed = 11;
    cfg.partitioner.g_max = 4;
    cfg.out_dir = TempDir("trace_a");
    run_experiment(cfg);
    const std::string a = ReadFile(cfg.out_dir / "trace.csv");
    cfg.out_dir = TempDir("trace_b");
    run_experiment(cfg);
    const std::string b = ReadFile(cfg.out_dir / "trace.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b) << method_name(m);
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "iter,method,arm,accepted,batch_size,parity,accuracy,budget_used,delta_improve");
    const json summary = json::parse(ReadFile(cfg.out_dir / "summary.json"));
    EXPECT_EQ(summary.at("schema"), 1);
    EXPECT_EQ(summary.at("method"), method_name(m));
    EXPECT_EQ(fs::exists(cfg.out_dir / "partitions.json"), is_bandit_method(m));
    EXPECT_EQ(fs::exists(cfg.out_dir / "influence.csv"), m == Method::kDataSiftInf);
  }
}

TEST(Checkpoints, BanditParityNeverGrows) {
  Fixture f = Small(6);
  const Partitioning part = fit_gmm(f.parts.pool, 3, 6);
  for (Method m : {Method::kAutoData, Method::kDataSift, Method::kDataSiftInf}) {
    f.config.method = m;
    const RunSummary s = run_method(f.parts.train, f.parts.test, f.parts.pool, &part, f.config);
    ASSERT_EQ(s.checkpoints.size(), 11u);
    EXPECT_EQ(s.checkpoints[0].parity, s.initial_parity);
    for (std::size_t i = 1; i < s.checkpoints.size(); ++i) {
      EXPECT_LE(std::abs(s.checkpoints[i].parity), std::abs(s.checkpoints[i - 1].parity));
      EXPECT_GE(s.checkpoints[i].budget_used, s.checkpoints[i - 1].budget_used);
    }
    EXPECT_EQ(s.checkpoints.back().parity, s.final_parity);
  }
}

TEST(Checkpoints, HandTrace) {
  RunSummary s;
  s.budget = 100;
  s.initial_parity = -0.4;
  IterationRecord a, b;
  a.budget_used = 20;
  a.parity = -0.3;
  b.budget_used = 40;
  b.parity = -0.1;
  s.trace = {a, b};
  fill_checkpoints(s);
  EXPECT_EQ(s.checkpoints[1].parity, -0.4);
  EXPECT_EQ(s.checkpoints[2].parity, -0.3);
  EXPECT_EQ(s.checkpoints[3].parity, -0.3);
  EXPECT_EQ(s.checkpoints[4].parity, -0.1);
  EXPECT_EQ(s.checkpoints[10].parity, -0.1);
  EXPECT_EQ(s.budget_to_reach(0.2), 40u);
  EXPECT_EQ(s.budget_to_reach(0.5), 0u);
  EXPECT_FALSE(s.budget_to_reach(0.05).has_value());
}

TEST(Experiment, AlreadyFairMeansNoAcquisition) {
  ExperimentConfig cfg;
  cfg.data.synthetic = SyntheticSpec::hiring(2000, 0);
  cfg.method = Method::kDataSift;
  cfg.bandit.tau = 2.0;
  const RunSummary s = run_experiment(cfg);
  EXPECT_EQ(s.acquired, 0u);
  EXPECT_EQ(s.iterations, 0u);
  EXPECT_EQ(s.stop_reason, "fair");
}

TEST(Experiment, ValidationSplitReportsHoldout) {
  ExperimentConfig cfg;
  cfg.data.synthetic = SyntheticSpec::hiring(2000, 0);
  cfg.method = Method::kRandom;
  cfg.validation_split = true;
  const RunSummary s = run_experiment(cfg);
  ASSERT_TRUE(s.holdout_parity.has_value());
  ASSERT_TRUE(s.holdout_accuracy.has_value());
  EXPECT_LE(std::abs(*s.holdout_parity), 1.0);
}

TEST(Experiment, ExcludingTheSensitiveFeature) {
  ExperimentConfig cfg;
  cfg.data.synthetic = SyntheticSpec::hiring(500, 0);
  cfg.exclude_sensitive = true;
  const Dataset d = load_data(cfg);
  EXPECT_EQ(d.dim(), cfg.data.synthetic->p - 1);
  EXPECT_FALSE(d.sensitive_feature().has_value());
}

TEST(Seeds, StreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed : {0, 1, 2}) {
    for (SeedStream s : {SeedStream::kData, SeedStream::kSplit, SeedStream::kPartition,
                         SeedStream::kSampler}) {
      EXPECT_TRUE(seen.insert(derive_seed(seed, s)).second);
      EXPECT_EQ(derive_seed(seed, s), derive_seed(seed, s));
    }
  }
}

TEST(Config, ParsesShippedConfigs) {
  const ExperimentConfig c = load_config(fs::path(FAIRACQ_CONFIG_DIR) / "hiring.json");
  EXPECT_EQ(c.method, Method::kDataSiftInf);
  ASSERT_TRUE(c.data.synthetic.has_value());
  EXPECT_EQ(c.data.synthetic->n, 20000u);
  EXPECT_DOUBLE_EQ(c.split.bias, 0.25);
  EXPECT_DOUBLE_EQ(c.bandit.alpha, 0.1);
  EXPECT_EQ(c.out_dir, fs::path(FAIRACQ_CONFIG_DIR) / "out/hiring");
  EXPECT_NO_THROW(c.validate());

  const ExperimentConfig adult = load_config(fs::path(FAIRACQ_CONFIG_DIR) / "adult.json");
  ASSERT_TRUE(adult.data.schema.has_value());
  EXPECT_EQ(adult.data.schema->sensitive_column, "sex");
  EXPECT_EQ(adult.data.subsample, 5000u);
}

TEST(Config, Errors) {
  const json ok = json::parse(R"({"data": {"synthetic": {"preset": "hiring", "n": 500}}})");
  EXPECT_NO_THROW(ExperimentConfig::from_json(ok).validate());
  auto bad = [&](const char* patch) {
    json j = ok;
    j.merge_patch(json::parse(patch));
    return ExperimentConfig::from_json(j);
  };
  EXPECT_THROW(bad(R"({"budget": 5})"), ConfigError);
  EXPECT_THROW(bad(R"({"method": "oracle"})"), ConfigError);
  EXPECT_THROW(bad(R"({"bandit": {"gamma": 1}})"), ConfigError);
  EXPECT_THROW(bad(R"({"bandit": {"reward": "fancy"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"split": {"ratios": [1, 2]}})"), ConfigError);
  EXPECT_THROW(bad(R"({"seed": "one"})"), ConfigError);
  EXPECT_THROW(bad(R"({"data": {"synthetic": {"preset": "lending"}}})"), ConfigError);
  EXPECT_THROW(bad(R"({"split": {"bias": 0.0}})").validate(), ConfigError);
  EXPECT_THROW(bad(R"({"bandit": {"alpha": -0.5}})").validate(), ConfigError);
  EXPECT_THROW(bad(R"({"data": {"csv": "x.csv"}})").validate(), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json::object()).validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(FAIRACQ_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = TempDir("cli");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    return (dir / name).string();
  };
  const std::string good = write(
      "good.json",
      R"({"method": "random", "data": {"synthetic": {"preset": "hiring", "n": 1000}}})");
  EXPECT_EQ(RunCli("--config " + good + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
  EXPECT_EQ(RunCli("--config " + good + " --seeds 1,2 --out " + (dir / "many").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "many" / "seed-2" / "summary.json"));

  EXPECT_EQ(RunCli("--config " + write("bad.json", R"({"method": "oracle"})")), 2);
  EXPECT_EQ(RunCli("--config " + good + " --method nope"), 2);
  const std::string schema = (fs::path(FAIRACQ_TEST_DATA) / "tiny_schema.json").string();
  EXPECT_EQ(RunCli("--config " + write("missing.json", R"({"data": {"csv": "nope.csv", "schema": ")" +
                                                           schema + R"("}})")),
            3);
  EXPECT_NE(RunCli(""), 0);
}

}  // namespace
}  // namespace fairacq
