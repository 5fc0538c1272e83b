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

#include "fairacq/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"

namespace fairacq {

BanditConfig BanditConfig::resolved(std::size_t pool_size) const {
  if (pool_size == 0) throw DataError("acquisition needs a non-empty pool");
  BanditConfig c = *this;
  if (c.budget == 0) c.budget = (pool_size * 20 + 99) / 100;
  if (c.batch_size == 0) c.batch_size = std::max<std::size_t>(1, (c.budget + 9) / 10);
  if (c.max_iterations == 0) c.max_iterations = (pool_size + c.batch_size - 1) / c.batch_size;
  if (!(c.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(c.tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (c.batch_size > c.budget) throw ConfigError("batch size exceeds budget");
  if (c.budget > pool_size) throw ConfigError("budget exceeds pool size");
  return c;
}

std::vector<double> compute_rewards(double delta_improve, std::size_t selected,
                                    const Partitioning& part, RewardVariant variant) {
  const std::size_t g = part.g();
  if (selected >= g) throw DataError("compute_rewards: selected arm out of range");
  std::vector<double> r(g);
  for (std::size_t j = 0; j < g; ++j) {
    const double br = 1.0 + std::abs(part.delta_br[j]);
    const double dist = 1.0 + part.dist(static_cast<Eigen::Index>(selected),
                                        static_cast<Eigen::Index>(j));
    switch (variant) {
      case RewardVariant::kBaseRateAndDistance:
        r[j] = delta_improve / (br * dist);
        break;
      case RewardVariant::kDistanceOnly:
        r[j] = delta_improve / dist;
        break;
      case RewardVariant::kBaseRateOnly:
        r[j] = delta_improve / br;
        break;
    }
  }
  return r;
}

double ucb_score(double R, double alpha, std::size_t total_n, std::size_t n_pos) {
  const double ratio = static_cast<double>(total_n) / static_cast<double>(n_pos + 1);
  // ln is clamped at zero; total_n == 0 gives ratio 0 and a zero bonus too.
  const double log_term = ratio > 1.0 ? std::log(ratio) : 0.0;
  return R + alpha * std::sqrt(2.0 * log_term);
}

void ucb_scores(std::span<ArmState> arms, double alpha, std::size_t total_n) {
  for (ArmState& a : arms) a.U = ucb_score(a.R, alpha, total_n, a.n_pos);
}

std::optional<std::size_t> select_arm(std::span<const ArmState> arms,
                                      std::span<const double> delta_br) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (!arms[i].active) continue;
    if (!best) {
      best = i;
      continue;
    }
    const ArmState& b = arms[*best];
    if (arms[i].U > b.U) {
      best = i;
    } else if (arms[i].U == b.U && i < delta_br.size() && *best < delta_br.size() &&
               std::abs(delta_br[i]) < std::abs(delta_br[*best])) {
      best = i;
    }
  }
  return best;
}

UcbBandit::UcbBandit(std::size_t arms, double alpha, CountMode count_mode)
    : arms_(arms), alpha_(alpha), count_mode_(count_mode) {}

std::optional<std::size_t> UcbBandit::select(std::span<const double> delta_br) const {
  return select_arm(arms_, delta_br);
}

std::size_t UcbBandit::total_n() const {
  std::size_t n = 0;
  for (const ArmState& a : arms_) n += a.n_pos;
  return n;
}

void UcbBandit::update(std::size_t selected, std::span<const double> rewards) {
  if (rewards.size() != arms_.size() || selected >= arms_.size()) {
    throw DataError("UcbBandit::update: reward vector does not match arm count");
  }
  for (std::size_t j = 0; j < arms_.size(); ++j) arms_[j].cum_reward += rewards[j];
  if (count_mode_ == CountMode::kSelections || rewards[selected] > 0.0) {
    ++arms_[selected].n_pos;
  }
  for (ArmState& a : arms_) {
    a.R = a.cum_reward / static_cast<double>(std::max<std::size_t>(1, a.n_pos));
  }
  ucb_scores(arms_, alpha_, total_n());
}

std::size_t RandomSampler::available(std::size_t arm, const Partitioning& part) const {
  return part.remaining[arm].size();
}

std::optional<std::vector<std::size_t>> RandomSampler::draw(std::size_t arm,
                                                            const Partitioning& part,
                                                            std::size_t k,
                                                            std::mt19937_64& rng) {
  const std::vector<std::size_t>& pool = part.remaining[arm];
  if (pool.size() < k) return std::nullopt;
  std::vector<std::size_t> out;
  out.reserve(k);
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), k, rng);
  return out;
}

namespace {

void RemoveRows(std::vector<std::size_t>& list, std::span<const std::size_t> rows) {
  const std::unordered_set<std::size_t> drop(rows.begin(), rows.end());
  std::erase_if(list, [&](std::size_t r) { return drop.contains(r); });
}

}  // namespace

AcquisitionResult run_acquisition(const Dataset& train, const Dataset& test,
                                  const Dataset& pool, Partitioning& part,
                                  const TrainConfig& model_config,
                                  const BanditConfig& bandit_config, BatchSampler& sampler) {
  const BanditConfig cfg = bandit_config.resolved(pool.size());
  if (part.assignment.size() != pool.size()) {
    throw DataError("partitioning does not describe this pool");
  }
  const std::size_t g = part.g();
  const std::size_t K = cfg.batch_size;

  AcquisitionResult out;
  out.budget = cfg.budget;
  out.batch_size = K;
  out.max_iterations = cfg.max_iterations;

  Dataset current = train;
  TrainedModel model = fairacq::train(current, model_config);
  FairnessReport report = demographic_parity(model, test);
  double f_best = report.parity;
  double acc = report.accuracy;
  out.initial_parity = f_best;
  out.initial_accuracy = acc;

  UcbBandit bandit(g, cfg.alpha, cfg.count_mode);
  for (std::size_t j = 0; j < g; ++j) {
    if (sampler.available(j, part) < K) bandit.deactivate(j);
  }

  std::mt19937_64 rng(cfg.seed);
  std::size_t budget_remaining = cfg.budget;
  std::size_t k = 0;
  while (true) {
    if (std::abs(f_best) < cfg.tau) {
      out.stop_reason = "fair";
      break;
    }
    if (budget_remaining < K) {
      out.stop_reason = "budget";
      break;
    }
    if (k >= cfg.max_iterations) {
      out.stop_reason = "max_iterations";
      break;
    }
    const std::optional<std::size_t> arm = bandit.select(part.delta_br);
    if (!arm) {
      out.stop_reason = "arms_exhausted";
      break;
    }
    std::optional<std::vector<std::size_t>> batch = sampler.draw(*arm, part, K, rng);
    if (!batch) {
      bandit.deactivate(*arm);
      continue;
    }
    ++k;

    IterationRecord rec;
    rec.iteration = k;
    rec.arm = static_cast<int>(*arm);
    for (std::size_t r : *batch) rec.batch_ids.push_back(pool.id(r));

    Dataset candidate = current.concat(pool.subset(*batch));
    std::optional<TrainedModel> next;
    FairnessReport next_report;
    try {
      next = fairacq::train(candidate, model_config,
                            cfg.warm_start ? &model.theta : nullptr);
      next_report = demographic_parity(*next, test);
    } catch (const NumericError&) {
      next.reset();
    }

    if (!next) {
      rec.failed = true;
      sampler.on_rejected(*arm, *batch);
    } else {
      rec.candidate_parity = next_report.parity;
      rec.delta_improve = std::abs(f_best) - std::abs(next_report.parity);
      rec.accepted = rec.delta_improve > 0.0 && std::abs(next_report.parity) <= std::abs(f_best);
      if (rec.accepted) {
        current = std::move(candidate);
        model = std::move(*next);
        f_best = next_report.parity;
        acc = next_report.accuracy;
        budget_remaining -= K;
        RemoveRows(part.remaining[*arm], *batch);
        out.acquired_rows.insert(out.acquired_rows.end(), batch->begin(), batch->end());
        sampler.on_accepted(*arm, *batch, model, current, part);
      } else {
        sampler.on_rejected(*arm, *batch);
      }
      bandit.update(*arm, compute_rewards(rec.delta_improve, *arm, part, cfg.reward));
    }
    for (std::size_t j = 0; j < g; ++j) {
      if (bandit.arms()[j].active && sampler.available(j, part) < K) bandit.deactivate(j);
    }
    rec.parity = f_best;
    rec.accuracy = acc;
    rec.budget_remaining = budget_remaining;
    rec.budget_used = cfg.budget - budget_remaining;
    rec.arms = bandit.arms();
    out.trace.push_back(std::move(rec));
  }

  out.final_parity = f_best;
  out.final_accuracy = acc;
  for (std::size_t r : out.acquired_rows) out.acquired_ids.push_back(pool.id(r));
  out.final_train = std::move(current);
  return out;
}

}  // namespace fairacq
