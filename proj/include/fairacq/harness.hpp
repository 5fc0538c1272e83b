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

// Experiment configuration, the acquisition methods and their outputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairacq/bandit.hpp"
#include "fairacq/dataset.hpp"
#include "fairacq/model.hpp"
#include "fairacq/partition.hpp"
#include "fairacq/valuation.hpp"
#include "json.hpp"

namespace fairacq {

enum class Method { kRandom, kEntropy, kInf, kAutoData, kDataSift, kDataSiftInf };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws ConfigError
bool is_bandit_method(Method m);

struct PartitionerConfig {
  enum class Kind { kGmm, kAttribute, kFixed };
  Kind kind = Kind::kGmm;
  std::size_t g_min = 2;  // kGmm: BIC search range
  std::size_t g_max = 8;
  std::size_t g = 4;      // kFixed
  std::string attribute;  // kAttribute
  GmmOptions gmm;
};

struct DataSource {
  // Either a CSV with its schema, or a synthetic population.
  std::optional<std::filesystem::path> csv;
  std::optional<Schema> schema;
  std::optional<SyntheticSpec> synthetic;
  std::size_t subsample = 0;  // 0 keeps every row
};

struct ExperimentConfig {
  DataSource data;
  SplitSpec split;
  PartitionerConfig partitioner;
  Method method = Method::kDataSiftInf;
  BanditConfig bandit;      // budget/batch_size of 0 come from the fractions
  double budget_frac = 0.2;  // of the pool
  double batch_frac = 0.1;   // of the budget
  TrainConfig model;
  RegressorOptions regressor;
  std::size_t refresh_every = 0;  // datasift-inf regressor refresh cadence
  bool exclude_sensitive = false;  // drop S from the model's features
  // Acquisition decisions use half of the test split; the other half only
  // reports the final model.
  bool validation_split = false;
  std::filesystem::path out_dir;   // empty: write nothing
  bool dump_partitions = true;
  bool dump_influence = true;
  std::uint64_t seed = 0;

  void validate() const;
  // Relative paths are resolved against `base_dir`. Unknown keys are errors.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  // Budget and batch size for a pool of this size, plus the derived seed.
  BanditConfig resolved_bandit(std::size_t pool_size) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// Independent sub-seeds so the split, the partitioner and the sampler do not
// share a stream.
enum class SeedStream : std::uint32_t { kData = 1, kSplit, kPartition, kSampler };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

struct Checkpoint {
  double fraction = 0.0;  // of the budget
  std::size_t budget_used = 0;
  double parity = 0.0;
  double accuracy = 0.0;
};

struct RunSummary {
  std::string method;
  double initial_parity = 0.0;
  double initial_accuracy = 0.0;
  double final_parity = 0.0;
  double final_accuracy = 0.0;
  std::vector<Checkpoint> checkpoints;  // 0%, 10%, ..., 100% of the budget
  std::size_t acquired = 0;
  std::size_t iterations = 0;
  std::size_t accepted_batches = 0;
  std::size_t budget = 0;
  std::size_t batch_size = 0;
  std::size_t partitions = 0;  // 0 for methods without arms
  double wall_seconds = 0.0;
  std::string stop_reason;
  // Set when decisions were made on a validation split.
  std::optional<double> holdout_parity;
  std::optional<double> holdout_accuracy;
  std::vector<std::int64_t> acquired_ids;
  std::vector<IterationRecord> trace;

  // Smallest budget spent at which |parity| <= threshold, if ever.
  std::optional<std::size_t> budget_to_reach(double threshold) const;
  nlohmann::json to_json() const;  // without the trace
};

// Fills checkpoints from the trace: each checkpoint reports the state after
// the last iteration whose budget_used does not exceed it.
void fill_checkpoints(RunSummary& summary);

// Baselines acquire unconditionally and run until the budget is spent.
RunSummary run_random(const Dataset& train, const Dataset& test, const Dataset& pool,
                      const ExperimentConfig& config);
// Highest predictive entropy first; ties by id.
RunSummary run_entropy(const Dataset& train, const Dataset& test, const Dataset& pool,
                       const ExperimentConfig& config);
// One regressor fit on the initial model, global top-K by predicted score.
RunSummary run_inf(const Dataset& train, const Dataset& test, const Dataset& pool,
                   const ExperimentConfig& config);

// Bandit methods. `part` is copied; the caller's partitioning is untouched.
RunSummary run_autodata(const Dataset& train, const Dataset& test, const Dataset& pool,
                        const Partitioning& part, const ExperimentConfig& config);
RunSummary run_datasift(const Dataset& train, const Dataset& test, const Dataset& pool,
                        const Partitioning& part, const ExperimentConfig& config);
RunSummary run_datasift_inf(const Dataset& train, const Dataset& test, const Dataset& pool,
                            const Partitioning& part, const ExperimentConfig& config);

// Dispatches on config.method; `part` is only read by bandit methods.
RunSummary run_method(const Dataset& train, const Dataset& test, const Dataset& pool,
                      const Partitioning* part, const ExperimentConfig& config);

Dataset load_data(const ExperimentConfig& config);
Partitioning build_partitioning(const Dataset& pool, const ExperimentConfig& config);

// Loads or synthesizes data, splits, partitions, runs and, when out_dir is
// set, writes trace.csv and summary.json (plus partitions.json and
// influence.csv where they apply).
RunSummary run_experiment(const ExperimentConfig& config);

// One line per iteration with the columns
// iter,method,arm,accepted,batch_size,parity,accuracy,budget_used,delta_improve
std::string trace_csv(const RunSummary& summary);

struct BruteForceResult {
  std::vector<std::int64_t> ids;
  double parity = 0.0;
  std::size_t evaluated = 0;
};

// Retrains on train + every K-subset of the pool and keeps the one with the
// smallest hard |parity| on `test`; the first subset in lexicographic row
// order wins ties. Requires C(|pool|, K) <= 1e6.
BruteForceResult brute_force_best_batch(const Dataset& train, const Dataset& test,
                                        const Dataset& pool, std::size_t k,
                                        const TrainConfig& config);

}  // namespace fairacq
