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

// L2-regularized logistic regression trained by Newton's method.
//
// Objective, averaged per point:
//   L(theta) = 1/n sum_i [ log(1 + exp(z_i)) - y_i z_i ] + lambda/2 |theta|^2
// with z_i = theta . x~_i, where x~ is x with a trailing 1 when the model
// fits an intercept. The intercept is regularized like every other weight so
// the Hessian is bounded below by lambda * I.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fairacq/dataset.hpp"

namespace fairacq {

struct TrainConfig {
  double lambda = 1e-3;
  double tol = 1e-8;  // on the gradient 2-norm
  int max_newton_iters = 100;
  bool fit_intercept = true;

  void validate() const;
};

struct TrainedModel {
  Eigen::VectorXd theta;  // p weights, then the intercept if configured
  TrainConfig config;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;

  // Number of input features the model expects.
  std::size_t input_dim() const {
    return static_cast<std::size_t>(theta.size()) - (config.fit_intercept ? 1 : 0);
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct LossGradHessian {
  double loss = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;
};

// Throws NumericError on a non-finite intermediate.
LossGradHessian loss_grad_hessian(const Dataset& data, const Eigen::VectorXd& theta,
                                  const TrainConfig& config);
double loss(const Dataset& data, const Eigen::VectorXd& theta, const TrainConfig& config);

// z_i = theta . x~_i for every row.
std::vector<double> linear_scores(const Dataset& data, const Eigen::VectorXd& theta,
                                  bool fit_intercept);

// Gradient of the unregularized per-point loss: (sigma(z) - y) x~.
Eigen::VectorXd point_gradient(const Eigen::VectorXd& theta, std::span<const double> x,
                               int label, bool fit_intercept);

// Requires a non-empty dataset with both labels. Starts from zero unless a
// warm start is given, so by default the result depends only on the data.
TrainedModel train(const Dataset& data, const TrainConfig& config,
                   const Eigen::VectorXd* warm_start = nullptr);

double predict_proba(const TrainedModel& model, std::span<const double> x);
int predict_label(const TrainedModel& model, std::span<const double> x);
std::vector<double> predict_proba(const TrainedModel& model, const Dataset& data);

double accuracy(const TrainedModel& model, const Dataset& data);

}  // namespace fairacq
