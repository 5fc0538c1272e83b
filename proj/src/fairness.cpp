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

#include "fairacq/fairness.hpp"

#include <cmath>
#include <vector>

#include "fairacq/errors.hpp"
#include "fairacq/simd/kernels.hpp"

namespace fairacq {

FairnessReport demographic_parity(std::span<const int> predictions, const Dataset& data) {
  if (predictions.size() != data.size()) {
    throw DataError("prediction count does not match dataset size");
  }
  std::size_t n[2] = {0, 0};
  std::size_t pos[2] = {0, 0};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = static_cast<std::size_t>(data.sensitive(i));
    ++n[s];
    pos[s] += predictions[i] == 1 ? 1 : 0;
    correct += predictions[i] == data.label(i) ? 1 : 0;
  }
  if (n[0] == 0 || n[1] == 0) {
    throw GroupError("demographic parity needs both sensitive groups");
  }
  FairnessReport r;
  r.n_protected = n[0];
  r.n_privileged = n[1];
  r.rate_protected = static_cast<double>(pos[0]) / static_cast<double>(n[0]);
  r.rate_privileged = static_cast<double>(pos[1]) / static_cast<double>(n[1]);
  r.parity = r.rate_protected - r.rate_privileged;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return r;
}

FairnessReport demographic_parity(const TrainedModel& model, const Dataset& data) {
  const std::vector<double> prob = predict_proba(model, data);
  std::vector<int> pred(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) pred[i] = prob[i] >= 0.5 ? 1 : 0;
  return demographic_parity(pred, data);
}

SoftParity soft_parity_and_grad(const Eigen::VectorXd& theta, const Dataset& data,
                                bool fit_intercept) {
  const std::size_t p = data.dim();
  const std::vector<double> z = linear_scores(data, theta, fit_intercept);
  std::size_t n[2] = {0, 0};
  for (int s : data.sensitive()) ++n[static_cast<std::size_t>(s)];
  if (n[0] == 0 || n[1] == 0) {
    throw GroupError("soft parity needs both sensitive groups");
  }
  const double w0 = 1.0 / static_cast<double>(n[0]);
  const double w1 = 1.0 / static_cast<double>(n[1]);

  // Signed per-row weights fold both group means into one pass.
  std::vector<double> slope(z.size());
  double value = 0.0;
  double bias_grad = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double sign_w = data.sensitive(i) == kProtected ? w0 : -w1;
    const double s = sigmoid(z[i]);
    value += sign_w * s;
    slope[i] = sign_w * s * (1.0 - s);
    bias_grad += slope[i];
  }
  SoftParity out;
  out.value = value;
  out.grad = Eigen::VectorXd::Zero(theta.size());
  simd::weighted_row_sum(data.features(), p, slope, {out.grad.data(), p});
  if (fit_intercept) out.grad[static_cast<Eigen::Index>(p)] = bias_grad;
  return out;
}

double base_rate_diff(const Dataset& data) { return group_stats(data).delta_br; }

double entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("entropy: probability outside [0, 1]");
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(p) + term(1.0 - p);
}

}  // namespace fairacq
