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

// UCB bandit over pool partitions with full-feedback rewards, and the
// acquisition loop that drives it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fairacq/dataset.hpp"
#include "fairacq/model.hpp"
#include "fairacq/partition.hpp"

namespace fairacq {

enum class RewardVariant {
  kBaseRateAndDistance,  // delta / ((1 + |dBR_j|) (1 + dist(i, j)))
  kDistanceOnly,         // delta / (1 + dist(i, j))
  kBaseRateOnly,         // delta / (1 + |dBR_j|)
};

// What n_pos counts.
enum class CountMode {
  kPositiveRewards,  // rounds where the arm was selected and its reward was > 0
  kSelections,       // every round the arm was selected
};

struct ArmState {
  double cum_reward = 0.0;  // sum of this arm's rewards over all rounds
  std::size_t n_pos = 0;
  double R = 0.0;  // cum_reward / max(1, n_pos)
  double U = 0.0;
  bool active = true;
};

struct BanditConfig {
  double alpha = 0.1;
  std::size_t budget = 0;          // B in points; 0 -> ceil(0.2 |pool|)
  std::size_t batch_size = 0;      // K; 0 -> ceil(0.1 B)
  double tau = 0.01;
  std::size_t max_iterations = 0;  // 0 -> ceil(|pool| / K)
  std::uint64_t seed = 0;
  RewardVariant reward = RewardVariant::kBaseRateAndDistance;
  CountMode count_mode = CountMode::kPositiveRewards;
  bool warm_start = false;

  // Fills the zero defaults for a pool of the given size and validates.
  BanditConfig resolved(std::size_t pool_size) const;
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  int arm = -1;               // -1 for methods without arms
  std::vector<std::int64_t> batch_ids;
  double delta_improve = 0.0;  // |F_before| - |F_candidate|
  bool accepted = false;
  bool failed = false;  // retraining threw
  double candidate_parity = 0.0;
  double parity = 0.0;    // of the current model after the accept/reject decision
  double accuracy = 0.0;  // idem
  std::size_t budget_used = 0;
  std::size_t budget_remaining = 0;
  std::vector<ArmState> arms;
};

// Per-arm rewards for one round. Every entry carries the sign of
// delta_improve.
std::vector<double> compute_rewards(double delta_improve, std::size_t selected,
                                    const Partitioning& part,
                                    RewardVariant variant = RewardVariant::kBaseRateAndDistance);

// R + alpha sqrt(2 max(0, ln(total_n / (n_pos + 1)))).
double ucb_score(double R, double alpha, std::size_t total_n, std::size_t n_pos);

// Recomputes U for every arm.
void ucb_scores(std::span<ArmState> arms, double alpha, std::size_t total_n);

// argmax U over active arms; ties go to the smaller |dBR|, then the smaller
// index. nullopt when no arm is active.
std::optional<std::size_t> select_arm(std::span<const ArmState> arms,
                                      std::span<const double> delta_br);

class UcbBandit {
 public:
  UcbBandit(std::size_t arms, double alpha, CountMode count_mode);

  std::optional<std::size_t> select(std::span<const double> delta_br) const;
  // Adds rewards[j] to every arm, bumps n_pos of `selected` per the count
  // mode, then refreshes R and U.
  void update(std::size_t selected, std::span<const double> rewards);
  void deactivate(std::size_t arm) { arms_[arm].active = false; }

  const std::vector<ArmState>& arms() const { return arms_; }
  std::size_t total_n() const;

 private:
  std::vector<ArmState> arms_;
  double alpha_;
  CountMode count_mode_;
};

// Supplies candidate batches from a partition's `remaining` list.
class BatchSampler {
 public:
  virtual ~BatchSampler() = default;
  // Points the sampler could still hand out for `arm`.
  virtual std::size_t available(std::size_t arm, const Partitioning& part) const = 0;
  // nullopt when fewer than k points are available.
  virtual std::optional<std::vector<std::size_t>> draw(std::size_t arm,
                                                       const Partitioning& part,
                                                       std::size_t k,
                                                       std::mt19937_64& rng) = 0;
  virtual void on_rejected(std::size_t /*arm*/, std::span<const std::size_t> /*batch*/) {}
  // Called after an accepted batch has been removed from `part.remaining`.
  virtual void on_accepted(std::size_t /*arm*/, std::span<const std::size_t> /*batch*/,
                           const TrainedModel& /*model*/, const Dataset& /*train*/,
                           Partitioning& /*part*/) {}
};

// Uniform draw without replacement from the arm's remaining points. Rejected
// points stay eligible.
class RandomSampler final : public BatchSampler {
 public:
  std::size_t available(std::size_t arm, const Partitioning& part) const override;
  std::optional<std::vector<std::size_t>> draw(std::size_t arm, const Partitioning& part,
                                               std::size_t k,
                                               std::mt19937_64& rng) override;
};

struct AcquisitionResult {
  std::vector<std::size_t> acquired_rows;  // pool rows, in acquisition order
  std::vector<std::int64_t> acquired_ids;
  std::vector<IterationRecord> trace;
  std::string stop_reason;
  double initial_parity = 0.0;
  double initial_accuracy = 0.0;
  double final_parity = 0.0;
  double final_accuracy = 0.0;
  std::size_t budget = 0;
  std::size_t batch_size = 0;
  std::size_t max_iterations = 0;
  Dataset final_train;
};

// Runs the acquisition loop. Partitions with fewer than K available points
// start inactive. `part.remaining` loses every accepted batch.
AcquisitionResult run_acquisition(const Dataset& train, const Dataset& test,
                                  const Dataset& pool, Partitioning& part,
                                  const TrainConfig& model_config,
                                  const BanditConfig& bandit_config, BatchSampler& sampler);

}  // namespace fairacq
