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

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "fairacq/dataset.hpp"
#include "fairacq/model.hpp"

namespace fairacq {

// Demographic parity of hard predictions. parity < 0 means the protected
// group (S = 0) receives the positive outcome less often.
struct FairnessReport {
  double parity = 0.0;  // rate_protected - rate_privileged
  double rate_protected = 0.0;
  double rate_privileged = 0.0;
  double accuracy = 0.0;
  std::size_t n_protected = 0;
  std::size_t n_privileged = 0;
};

FairnessReport demographic_parity(const TrainedModel& model, const Dataset& data);

// Same report from precomputed hard predictions (one per row of `data`).
FairnessReport demographic_parity(std::span<const int> predictions, const Dataset& data);

// Smooth surrogate: mean sigma(z) over S = 0 minus mean sigma(z) over S = 1,
// and its gradient in theta. Only used where a derivative is needed.
struct SoftParity {
  double value = 0.0;
  Eigen::VectorXd grad;
};

SoftParity soft_parity_and_grad(const Eigen::VectorXd& theta, const Dataset& data,
                                bool fit_intercept = true);

// P(Y=1|S=0) - P(Y=1|S=1) over the labels.
double base_rate_diff(const Dataset& data);

// Binary entropy in bits; 0 log 0 = 0.
double entropy(double p);

}  // namespace fairacq
