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

// Influence-function valuation of candidate points.
//
// Up-weighting a point d by eps moves the optimum by
//   d theta / d eps = -H^{-1} grad L(d, theta*)
// and, by the chain rule, a smooth functional F of theta by
//   d F / d eps = grad F(theta*)^T (-H^{-1} grad L(d, theta*)).
// Adding d to n training points is eps = 1/n. F here is the soft parity on
// the evaluation set; scores are oriented so that positive means |parity|
// shrinks.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fairacq/bandit.hpp"
#include "fairacq/dataset.hpp"
#include "fairacq/model.hpp"
#include "fairacq/partition.hpp"

namespace fairacq {

struct InfluenceScore {
  std::int64_t id = 0;
  double score = 0.0;  // oriented, scaled by 1/n: > 0 means |parity| decreases
  double raw = 0.0;    // d F / d eps, signed
};

// Hessian of the training objective at theta*, factorized once.
class HessianSolver {
 public:
  HessianSolver(const TrainedModel& model, const Dataset& train);

  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;  // H^{-1} v
  const Eigen::MatrixXd& hessian() const { return hessian_; }

 private:
  Eigen::MatrixXd hessian_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// -H^{-1} grad L(d, theta*).
Eigen::VectorXd influence_on_params(const TrainedModel& model, const Dataset& train,
                                    const Example& d);

class FairnessInfluence {
 public:
  FairnessInfluence(const TrainedModel& model, const Dataset& train, const Dataset& test);

  // d F / d eps for a point with these features and label.
  double raw(std::span<const double> x, int label) const;
  InfluenceScore score(const Example& d) const;
  std::vector<InfluenceScore> score_all(const Dataset& data) const;

  // -sign of the current parity (hard, falling back to soft when it is 0).
  double orientation() const { return orientation_; }
  std::size_t train_size() const { return n_; }
  double current_parity() const { return parity_; }
  const HessianSolver& solver() const { return solver_; }
  // H^{-1} grad F.
  const Eigen::VectorXd& direction() const { return direction_; }

 private:
  TrainedModel model_;
  HessianSolver solver_;
  Eigen::VectorXd direction_;
  double orientation_ = 1.0;
  double parity_ = 0.0;
  std::size_t n_ = 0;
};

InfluenceScore influence_on_fairness(const TrainedModel& model, const Dataset& train,
                                     const Dataset& test, const Example& d);

enum class RegressorFeatures {
  kAdditive,        // (x~, y, s)
  kLabelInteracted  // (x~, y, s, y * x~)
};

// Ridge regression from a point's features, label and group to its
// influence score. The bias is unpenalized and kept outside `weights`.
struct InfluenceRegressor {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double ridge_lambda = 1.0;
  double r2 = 0.0;  // on the fitting data
  bool fit_intercept = true;  // whether x~ carries the model's constant column
  RegressorFeatures features = RegressorFeatures::kAdditive;

  Eigen::VectorXd augment(std::span<const double> x, int label, int sensitive) const;
  double predict(std::span<const double> x, int label, int sensitive) const;
  std::vector<double> predict(const Dataset& data) const;
};

struct RegressorOptions {
  double ridge_lambda = 1.0;
  bool fit_intercept = true;
  // The additive form cannot express label-by-feature effects, which carry
  // most of the signal in fairness influence.
  RegressorFeatures features = RegressorFeatures::kLabelInteracted;
};

// `scores[i]` must belong to `train` row i.
InfluenceRegressor fit_influence_regressor(const Dataset& train,
                                           std::span<const InfluenceScore> scores,
                                           const RegressorOptions& options = {});

// Each partition's `remaining` ordered by predicted score, descending; ties by
// id ascending.
Partitioning sort_partitions(const Partitioning& part, const Dataset& pool,
                             const InfluenceRegressor& reg);

// Scores the training set with the given model, fits the regressor on those
// scores and sorts the pool partitions.
struct ValuationResult {
  InfluenceRegressor regressor;
  std::vector<InfluenceScore> train_scores;
  Partitioning sorted;
};
ValuationResult value_pool(const TrainedModel& model, const Dataset& train,
                           const Dataset& test, const Dataset& pool,
                           const Partitioning& part, const RegressorOptions& options = {});

// Hands out the first K points of an arm's sorted `remaining` that have not
// yet been proposed and rejected. With refresh_every > 0 the regressor is
// refitted on the current model after that many accepted batches and every
// arm is re-sorted.
class TopKSampler final : public BatchSampler {
 public:
  explicit TopKSampler(std::size_t arms);
  TopKSampler(std::size_t arms, const Dataset& test, const Dataset& pool,
              RegressorOptions options, std::size_t refresh_every);

  std::size_t available(std::size_t arm, const Partitioning& part) const override;
  std::optional<std::vector<std::size_t>> draw(std::size_t arm, const Partitioning& part,
                                               std::size_t k,
                                               std::mt19937_64& rng) override;
  void on_rejected(std::size_t arm, std::span<const std::size_t> batch) override;
  void on_accepted(std::size_t arm, std::span<const std::size_t> batch,
                   const TrainedModel& model, const Dataset& train,
                   Partitioning& part) override;

  std::size_t refreshes() const { return refreshes_; }

 private:
  std::vector<std::unordered_set<std::size_t>> consumed_;
  const Dataset* test_ = nullptr;
  const Dataset* pool_ = nullptr;
  RegressorOptions options_;
  std::size_t refresh_every_ = 0;
  std::size_t accepted_since_refresh_ = 0;
  std::size_t refreshes_ = 0;
};

enum class ParityKind { kSoft, kHard };

// Testing oracle: parity(retrain(train + d)) - parity(retrain(train)), both
// measured on `test`.
double loo_retrain_delta(const Dataset& train, const Dataset& test, const Example& d,
                         const TrainConfig& config, ParityKind kind = ParityKind::kSoft);

}  // namespace fairacq
