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

#include "fairacq/model.hpp"

#include <string>

#include "fairacq/errors.hpp"
#include "fairacq/simd/kernels.hpp"

namespace fairacq {
namespace {

std::size_t ParamDim(const Dataset& data, const TrainConfig& config) {
  return data.dim() + (config.fit_intercept ? 1 : 0);
}

void CheckTheta(const Dataset& data, const Eigen::VectorXd& theta, bool fit_intercept) {
  const std::size_t expected = data.dim() + (fit_intercept ? 1 : 0);
  if (static_cast<std::size_t>(theta.size()) != expected) {
    throw DataError("parameter dimension " + std::to_string(theta.size()) +
                    " does not match data dimension " + std::to_string(expected));
  }
}

std::span<const double> Weights(const Eigen::VectorXd& theta, std::size_t p) {
  return {theta.data(), p};
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (max_newton_iters < 1) throw ConfigError("max_newton_iters must be >= 1");
}

std::vector<double> linear_scores(const Dataset& data, const Eigen::VectorXd& theta,
                                  bool fit_intercept) {
  CheckTheta(data, theta, fit_intercept);
  const std::size_t p = data.dim();
  const double bias = fit_intercept ? theta[static_cast<Eigen::Index>(p)] : 0.0;
  std::vector<double> z(data.size());
  simd::row_dots(data.features(), p, Weights(theta, p), bias, z);
  return z;
}

double loss(const Dataset& data, const Eigen::VectorXd& theta, const TrainConfig& config) {
  if (data.empty()) throw DataError("loss of an empty dataset");
  const std::vector<double> z = linear_scores(data, theta, config.fit_intercept);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += softplus(z[i]) - data.label(i) * z[i];
  }
  const double value = acc / static_cast<double>(z.size()) +
                       0.5 * config.lambda * theta.squaredNorm();
  if (!std::isfinite(value)) throw NumericError("non-finite loss");
  return value;
}

LossGradHessian loss_grad_hessian(const Dataset& data, const Eigen::VectorXd& theta,
                                  const TrainConfig& config) {
  if (data.empty()) throw DataError("loss of an empty dataset");
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  const std::size_t d = ParamDim(data, config);
  const std::vector<double> z = linear_scores(data, theta, config.fit_intercept);

  std::vector<double> residual(n);
  std::vector<double> curvature(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigmoid(z[i]);
    acc += softplus(z[i]) - data.label(i) * z[i];
    residual[i] = s - data.label(i);
    curvature[i] = s * (1.0 - s);
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGradHessian out;
  out.loss = acc * inv_n + 0.5 * config.lambda * theta.squaredNorm();
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  simd::weighted_row_sum(data.features(), p, residual, {out.grad.data(), p});

  // Kernel fills the upper triangle only; mirrored below.
  std::vector<double> gram(p * p, 0.0);
  simd::weighted_gram(data.features(), p, curvature, gram);
  out.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      const double v = gram[a * p + b];
      out.hessian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      out.hessian(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  if (config.fit_intercept) {
    const auto last = static_cast<Eigen::Index>(p);
    std::vector<double> cross(p, 0.0);
    simd::weighted_row_sum(data.features(), p, curvature, cross);
    double rsum = 0.0, csum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rsum += residual[i];
      csum += curvature[i];
    }
    out.grad[last] = rsum;
    for (std::size_t a = 0; a < p; ++a) {
      out.hessian(static_cast<Eigen::Index>(a), last) = cross[a];
      out.hessian(last, static_cast<Eigen::Index>(a)) = cross[a];
    }
    out.hessian(last, last) = csum;
  }
  out.grad *= inv_n;
  out.grad += config.lambda * theta;
  out.hessian *= inv_n;
  out.hessian.diagonal().array() += config.lambda;

  if (!std::isfinite(out.loss) || !out.grad.allFinite() || !out.hessian.allFinite()) {
    throw NumericError("non-finite loss, gradient or Hessian");
  }
  return out;
}

Eigen::VectorXd point_gradient(const Eigen::VectorXd& theta, std::span<const double> x,
                               int label, bool fit_intercept) {
  const std::size_t p = x.size();
  if (static_cast<std::size_t>(theta.size()) != p + (fit_intercept ? 1 : 0)) {
    throw DataError("point_gradient: dimension mismatch");
  }
  double z = simd::dot(Weights(theta, p), x);
  if (fit_intercept) z += theta[static_cast<Eigen::Index>(p)];
  const double r = sigmoid(z) - label;
  Eigen::VectorXd g(theta.size());
  for (std::size_t j = 0; j < p; ++j) g[static_cast<Eigen::Index>(j)] = r * x[j];
  if (fit_intercept) g[static_cast<Eigen::Index>(p)] = r;
  return g;
}

TrainedModel train(const Dataset& data, const TrainConfig& config,
                   const Eigen::VectorXd* warm_start) {
  config.validate();
  if (data.empty()) throw DataError("cannot train on an empty dataset");
  bool has0 = false, has1 = false;
  for (int y : data.labels()) (y == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw DataError("training data must contain both labels");

  TrainedModel model;
  model.config = config;
  model.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ParamDim(data, config)));
  if (warm_start != nullptr && warm_start->size() == model.theta.size()) {
    model.theta = *warm_start;
  }

  for (int iter = 0; iter < config.max_newton_iters; ++iter) {
    const LossGradHessian lgh = loss_grad_hessian(data, model.theta, config);
    model.grad_norm = lgh.grad.norm();
    model.iterations = iter;
    if (model.grad_norm <= config.tol) {
      model.converged = true;
      return model;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(lgh.hessian);
    if (llt.info() != Eigen::Success) {
      throw OptimizationError("Hessian factorization failed at Newton iteration " +
                              std::to_string(iter));
    }
    const Eigen::VectorXd step = -llt.solve(lgh.grad);
    if (!step.allFinite()) throw OptimizationError("non-finite Newton step");

    // Armijo backtracking; the slack absorbs roundoff once the loss has
    // converged to machine precision.
    const double slope = lgh.grad.dot(step);
    const double slack = 1e-14 * std::max(1.0, std::abs(lgh.loss));
    double t = 1.0;
    Eigen::VectorXd next = model.theta + step;
    while (loss(data, next, config) > lgh.loss + 1e-4 * t * slope + slack) {
      t *= 0.5;
      if (t < 1e-10) throw OptimizationError("line search failed");
      next = model.theta + t * step;
    }
    model.theta = std::move(next);
  }
  const LossGradHessian lgh = loss_grad_hessian(data, model.theta, config);
  model.grad_norm = lgh.grad.norm();
  model.iterations = config.max_newton_iters;
  model.converged = model.grad_norm <= config.tol;
  return model;
}

double predict_proba(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw DataError("predict: expected " + std::to_string(model.input_dim()) +
                    " features, got " + std::to_string(x.size()));
  }
  double z = simd::dot(Weights(model.theta, x.size()), x);
  if (model.config.fit_intercept) z += model.theta[static_cast<Eigen::Index>(x.size())];
  return sigmoid(z);
}

int predict_label(const TrainedModel& model, std::span<const double> x) {
  return predict_proba(model, x) >= 0.5 ? 1 : 0;
}

std::vector<double> predict_proba(const TrainedModel& model, const Dataset& data) {
  if (data.dim() != model.input_dim()) throw DataError("predict: dimension mismatch");
  std::vector<double> z = linear_scores(data, model.theta, model.config.fit_intercept);
  for (double& v : z) v = sigmoid(v);
  return z;
}

double accuracy(const TrainedModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("accuracy of an empty dataset");
  const std::vector<double> prob = predict_proba(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    correct += ((prob[i] >= 0.5 ? 1 : 0) == data.label(i)) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(prob.size());
}

}  // namespace fairacq
