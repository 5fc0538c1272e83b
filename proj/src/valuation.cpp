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

#include "fairacq/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"

namespace fairacq {

HessianSolver::HessianSolver(const TrainedModel& model, const Dataset& train)
    : hessian_(loss_grad_hessian(train, model.theta, model.config).hessian),
      llt_(hessian_) {
  if (llt_.info() != Eigen::Success) {
    throw NumericError("Hessian is not positive definite at the fitted parameters");
  }
}

Eigen::VectorXd HessianSolver::solve(const Eigen::VectorXd& v) const { return llt_.solve(v); }

Eigen::VectorXd influence_on_params(const TrainedModel& model, const Dataset& train,
                                    const Example& d) {
  const HessianSolver solver(model, train);
  return -solver.solve(
      point_gradient(model.theta, d.features, d.label, model.config.fit_intercept));
}

FairnessInfluence::FairnessInfluence(const TrainedModel& model, const Dataset& train,
                                     const Dataset& test)
    : model_(model), solver_(model, train), n_(train.size()) {
  const SoftParity soft = soft_parity_and_grad(model.theta, test, model.config.fit_intercept);
  // grad F^T (-H^{-1} g) == -(H^{-1} grad F)^T g since H is symmetric.
  direction_ = solver_.solve(soft.grad);
  parity_ = demographic_parity(model, test).parity;
  const double sign_source = parity_ != 0.0 ? parity_ : soft.value;
  orientation_ = sign_source > 0.0 ? -1.0 : 1.0;
}

double FairnessInfluence::raw(std::span<const double> x, int label) const {
  const Eigen::VectorXd g =
      point_gradient(model_.theta, x, label, model_.config.fit_intercept);
  return -direction_.dot(g);
}

InfluenceScore FairnessInfluence::score(const Example& d) const {
  InfluenceScore s;
  s.id = d.id;
  s.raw = raw(d.features, d.label);
  s.score = orientation_ * s.raw / static_cast<double>(n_);
  if (!std::isfinite(s.score)) throw NumericError("non-finite influence score");
  return s;
}

std::vector<InfluenceScore> FairnessInfluence::score_all(const Dataset& data) const {
  std::vector<InfluenceScore> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    InfluenceScore s;
    s.id = data.id(i);
    s.raw = raw(data.row(i), data.label(i));
    s.score = orientation_ * s.raw / static_cast<double>(n_);
    if (!std::isfinite(s.score)) throw NumericError("non-finite influence score");
    out.push_back(s);
  }
  return out;
}

InfluenceScore influence_on_fairness(const TrainedModel& model, const Dataset& train,
                                     const Dataset& test, const Example& d) {
  return FairnessInfluence(model, train, test).score(d);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd InfluenceRegressor::augment(std::span<const double> x, int label,
                                            int sensitive) const {
  const auto p = static_cast<Eigen::Index>(x.size());
  const Eigen::Index base = p + (fit_intercept ? 1 : 0);
  const Eigen::Index dim =
      base + 2 + (features == RegressorFeatures::kLabelInteracted ? base : 0);
  Eigen::VectorXd z(dim);
  for (Eigen::Index j = 0; j < p; ++j) z[j] = x[static_cast<std::size_t>(j)];
  if (fit_intercept) z[p] = 1.0;
  z[base] = label;
  z[base + 1] = sensitive;
  if (features == RegressorFeatures::kLabelInteracted) {
    z.tail(base) = static_cast<double>(label) * z.head(base);
  }
  return z;
}

double InfluenceRegressor::predict(std::span<const double> x, int label, int sensitive) const {
  return bias + weights.dot(augment(x, label, sensitive));
}

std::vector<double> InfluenceRegressor::predict(const Dataset& data) const {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = predict(data.row(i), data.label(i), data.sensitive(i));
  }
  return out;
}

InfluenceRegressor fit_influence_regressor(const Dataset& train,
                                           std::span<const InfluenceScore> scores,
                                           const RegressorOptions& options) {
  if (train.empty()) throw DataError("influence regressor needs training points");
  if (scores.size() != train.size()) {
    throw DataError("influence scores do not cover the training set");
  }
  if (!(options.ridge_lambda > 0.0)) throw ConfigError("ridge lambda must be > 0");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].id != train.id(i)) {
      throw DataError("influence score order does not match the training set");
    }
  }

  InfluenceRegressor reg;
  reg.ridge_lambda = options.ridge_lambda;
  reg.fit_intercept = options.fit_intercept;
  reg.features = options.features;

  const auto n = static_cast<Eigen::Index>(train.size());
  const Eigen::Index m = reg.augment(train.row(0), 0, 0).size();
  Eigen::MatrixXd Z(n, m);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    Z.row(i) = reg.augment(train.row(r), train.label(r), train.sensitive(r)).transpose();
    t[i] = scores[r].score;
  }
  const Eigen::RowVectorXd z_mean = Z.colwise().mean();
  const double t_mean = t.mean();
  Z.rowwise() -= z_mean;
  const Eigen::VectorXd tc = t.array() - t_mean;

  Eigen::MatrixXd A = Z.transpose() * Z;
  A.diagonal().array() += options.ridge_lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw NumericError("ridge system could not be factorized");
  reg.weights = ldlt.solve(Z.transpose() * tc);
  reg.bias = t_mean - z_mean.dot(reg.weights);

  const Eigen::VectorXd resid = tc - Z * reg.weights;
  const double ss_tot = tc.squaredNorm();
  const double ss_res = resid.squaredNorm();
  reg.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 1e-24 ? 1.0 : 0.0);
  if (!reg.weights.allFinite() || !std::isfinite(reg.bias)) {
    throw NumericError("non-finite ridge solution");
  }
  return reg;
}

Partitioning sort_partitions(const Partitioning& part, const Dataset& pool,
                             const InfluenceRegressor& reg) {
  Partitioning sorted = part;
  const std::vector<double> predicted = reg.predict(pool);
  for (std::vector<std::size_t>& rows : sorted.remaining) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      if (predicted[a] != predicted[b]) return predicted[a] > predicted[b];
      return pool.id(a) < pool.id(b);
    });
  }
  return sorted;
}

ValuationResult value_pool(const TrainedModel& model, const Dataset& train,
                           const Dataset& test, const Dataset& pool,
                           const Partitioning& part, const RegressorOptions& options) {
  ValuationResult out;
  const FairnessInfluence influence(model, train, test);
  out.train_scores = influence.score_all(train);
  RegressorOptions opts = options;
  opts.fit_intercept = model.config.fit_intercept;
  out.regressor = fit_influence_regressor(train, out.train_scores, opts);
  out.sorted = sort_partitions(part, pool, out.regressor);
  return out;
}

// ---------------------------------------------------------------------------

TopKSampler::TopKSampler(std::size_t arms) : consumed_(arms) {}

TopKSampler::TopKSampler(std::size_t arms, const Dataset& test, const Dataset& pool,
                         RegressorOptions options, std::size_t refresh_every)
    : consumed_(arms),
      test_(&test),
      pool_(&pool),
      options_(options),
      refresh_every_(refresh_every) {}

std::size_t TopKSampler::available(std::size_t arm, const Partitioning& part) const {
  const auto& rows = part.remaining[arm];
  const auto& used = consumed_[arm];
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [&](std::size_t r) { return !used.contains(r); }));
}

std::optional<std::vector<std::size_t>> TopKSampler::draw(std::size_t arm,
                                                          const Partitioning& part,
                                                          std::size_t k,
                                                          std::mt19937_64& /*rng*/) {
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t r : part.remaining[arm]) {
    if (out.size() == k) break;
    if (!consumed_[arm].contains(r)) out.push_back(r);
  }
  if (out.size() < k) return std::nullopt;
  return out;
}

void TopKSampler::on_rejected(std::size_t arm, std::span<const std::size_t> batch) {
  consumed_[arm].insert(batch.begin(), batch.end());
}

void TopKSampler::on_accepted(std::size_t /*arm*/, std::span<const std::size_t> /*batch*/,
                              const TrainedModel& model, const Dataset& train,
                              Partitioning& part) {
  if (refresh_every_ == 0 || test_ == nullptr || pool_ == nullptr) return;
  if (++accepted_since_refresh_ < refresh_every_) return;
  accepted_since_refresh_ = 0;
  ++refreshes_;
  const FairnessInfluence influence(model, train, *test_);
  const std::vector<InfluenceScore> scores = influence.score_all(train);
  RegressorOptions opts = options_;
  opts.fit_intercept = model.config.fit_intercept;
  const InfluenceRegressor reg = fit_influence_regressor(train, scores, opts);
  part = sort_partitions(part, *pool_, reg);
}

// ---------------------------------------------------------------------------

namespace {

double Parity(const TrainedModel& model, const Dataset& test, ParityKind kind) {
  if (kind == ParityKind::kHard) return demographic_parity(model, test).parity;
  return soft_parity_and_grad(model.theta, test, model.config.fit_intercept).value;
}

}  // namespace

double loo_retrain_delta(const Dataset& train, const Dataset& test, const Example& d,
                         const TrainConfig& config, ParityKind kind) {
  const TrainedModel base = fairacq::train(train, config);
  const Example extra[] = {d};
  const Dataset augmented = train.concat(
      Dataset::from_examples(extra, train.feature_names(), train.sensitive_feature()));
  const TrainedModel with_d = fairacq::train(augmented, config);
  return Parity(with_d, test, kind) - Parity(base, test, kind);
}

}  // namespace fairacq
