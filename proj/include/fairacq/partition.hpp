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
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairacq/dataset.hpp"
#include "json.hpp"

namespace fairacq {

// Disjoint partitions of a pool. Points are referred to by their row index in
// the pool Dataset; `to_json` maps them back to example ids.
struct Partitioning {
  std::vector<int> assignment;             // pool row -> partition
  Eigen::MatrixXd centroids;               // g x p, original feature space
  Eigen::MatrixXd standardized_centroids;  // g x p, z-scored feature space
  std::vector<std::size_t> sizes;
  std::vector<double> delta_br;
  Eigen::MatrixXd dist;  // g x g, normalized to max 1
  // Unconsumed pool rows per partition, in sampling order. Only the
  // acquisition engine mutates this.
  std::vector<std::vector<std::size_t>> remaining;

  // Diagnostics from mixture fitting.
  std::size_t requested_g = 0;
  int reseeds = 0;
  double log_likelihood = 0.0;

  std::size_t g() const { return sizes.size(); }
  nlohmann::json to_json(const Dataset& pool) const;
};

struct GmmOptions {
  int max_iters = 200;
  double tol = 1e-6;          // on mean per-point log-likelihood
  double variance_floor = 1e-3;  // in standardized units
  int max_reseeds = 5;
};

// Diagonal-covariance Gaussian mixture fitted by EM on z-scored features,
// k-means++ seeding, hard assignment by maximum responsibility. When a
// component ends up empty the fit is re-seeded, and after max_reseeds
// failures g is reduced by one.
Partitioning fit_gmm(const Dataset& pool, std::size_t g, std::uint64_t seed,
                     const GmmOptions& options = {});

// Bayesian information criterion of a fitted mixture:
// -2 loglik + (g (2p + 1) - 1) ln n.
double gmm_bic(const Partitioning& part, std::size_t n, std::size_t p);

struct GSelection {
  std::size_t g = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> bic;
};

// Fits every g in [g_min, g_max] with seed + g and returns the BIC argmin;
// ties go to the smaller g.
GSelection select_g(const Dataset& pool, std::size_t g_min, std::size_t g_max,
                    std::uint64_t seed, const GmmOptions& options = {});

// One partition per distinct value of a categorical attribute (at most 32).
Partitioning partition_by_attribute(const Dataset& pool, const std::string& column);

// Pairwise Euclidean distances between rows, divided by the largest one; all
// zero when g == 1 or every centroid coincides.
Eigen::MatrixXd normalized_distances(const Eigen::MatrixXd& centroids);

// Fills centroids, sizes, delta_br, dist and remaining from `assignment`.
// Partitions lacking a sensitive group or a label class get the pool-level
// base-rate difference.
Partitioning make_partitioning(const Dataset& pool, std::vector<int> assignment,
                               std::size_t g);

}  // namespace fairacq
