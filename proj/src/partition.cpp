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

#include "fairacq/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"
#include "fairacq/simd/kernels.hpp"

namespace fairacq {
namespace {

struct Standardized {
  std::vector<double> z;  // n x p row-major
  std::vector<double> mean;
  std::vector<double> sd;
};

Standardized Standardize(const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  Standardized s{std::vector<double>(data.features().begin(), data.features().end()),
                 std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += s.z[i * p + j];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = s.z[i * p + j] - s.mean[j];
      s.sd[j] += d * d;
    }
  }
  for (double& v : s.sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;  // constant column
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) s.z[i * p + j] = (s.z[i * p + j] - s.mean[j]) / s.sd[j];
  }
  return s;
}

struct MixtureFit {
  std::vector<int> assignment;
  std::vector<std::size_t> counts;
  double log_likelihood = 0.0;
};

class DiagonalMixture {
 public:
  DiagonalMixture(const std::vector<double>& z, std::size_t n, std::size_t p,
                  std::size_t g, const GmmOptions& options)
      : z_(z), n_(n), p_(p), g_(g), options_(options),
        means_(g, std::vector<double>(p, 0.0)),
        vars_(g, std::vector<double>(p, 1.0)),
        log_weights_(g, -std::log(static_cast<double>(g))),
        log_prob_(n * g),
        scratch_(n) {}

  MixtureFit Fit(std::uint64_t seed) {
    Seed(seed);
    double prev = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options_.max_iters; ++iter) {
      const double ll = EStep() / static_cast<double>(n_);
      MStep();
      if (std::abs(ll - prev) < options_.tol) break;
      prev = ll;
    }
    MixtureFit fit;
    fit.log_likelihood = EStep();
    fit.assignment.resize(n_);
    fit.counts.assign(g_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = log_prob_.data() + i * g_;
      const auto k = static_cast<std::size_t>(std::max_element(row, row + g_) - row);
      fit.assignment[i] = static_cast<int>(k);
      ++fit.counts[k];
    }
    return fit;
  }

 private:
  // k-means++ seeding of the means.
  void Seed(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    std::vector<double> d2(n_, std::numeric_limits<double>::infinity());
    std::vector<double> ones(p_, 1.0);
    std::size_t idx = pick(rng);
    for (std::size_t k = 0; k < g_; ++k) {
      std::copy_n(z_.data() + idx * p_, p_, means_[k].begin());
      simd::diag_mahalanobis(z_, p_, means_[k], ones, scratch_);
      for (std::size_t i = 0; i < n_; ++i) d2[i] = std::min(d2[i], scratch_[i]);
      if (k + 1 == g_) break;
      double total = 0.0;
      for (double v : d2) total += v;
      if (total > 0.0) {
        std::discrete_distribution<std::size_t> next(d2.begin(), d2.end());
        idx = next(rng);
      } else {
        idx = pick(rng);
      }
    }
    for (auto& v : vars_) std::fill(v.begin(), v.end(), 1.0);
    std::fill(log_weights_.begin(), log_weights_.end(),
              -std::log(static_cast<double>(g_)));
  }

  // Fills log_prob_ with normalized log responsibilities; returns the total
  // log-likelihood.
  double EStep() {
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    std::vector<double> inv_var(p_);
    for (std::size_t k = 0; k < g_; ++k) {
      double log_det = 0.0;
      for (std::size_t j = 0; j < p_; ++j) {
        inv_var[j] = 1.0 / vars_[k][j];
        log_det += std::log(vars_[k][j]);
      }
      simd::diag_mahalanobis(z_, p_, means_[k], inv_var, scratch_);
      const double c = log_weights_[k] - 0.5 * (static_cast<double>(p_) * log_2pi + log_det);
      for (std::size_t i = 0; i < n_; ++i) log_prob_[i * g_ + k] = c - 0.5 * scratch_[i];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double* row = log_prob_.data() + i * g_;
      const double m = *std::max_element(row, row + g_);
      double s = 0.0;
      for (std::size_t k = 0; k < g_; ++k) s += std::exp(row[k] - m);
      const double lse = m + std::log(s);
      for (std::size_t k = 0; k < g_; ++k) row[k] -= lse;
      total += lse;
    }
    return total;
  }

  void MStep() {
    for (std::size_t k = 0; k < g_; ++k) {
      for (std::size_t i = 0; i < n_; ++i) scratch_[i] = std::exp(log_prob_[i * g_ + k]);
      double nk = 0.0;
      for (double r : scratch_) nk += r;
      if (nk < 1e-10) {
        // Collapsed component; leave its parameters for the empty check.
        log_weights_[k] = std::log(1e-300);
        continue;
      }
      std::vector<double>& mu = means_[k];
      std::fill(mu.begin(), mu.end(), 0.0);
      simd::weighted_row_sum(z_, p_, scratch_, mu);
      for (double& v : mu) v /= nk;
      std::vector<double>& var = vars_[k];
      std::fill(var.begin(), var.end(), 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        const double* row = z_.data() + i * p_;
        for (std::size_t j = 0; j < p_; ++j) {
          const double d = row[j] - mu[j];
          var[j] += scratch_[i] * d * d;
        }
      }
      for (double& v : var) v = std::max(v / nk, options_.variance_floor);
      log_weights_[k] = std::log(nk / static_cast<double>(n_));
    }
  }

  const std::vector<double>& z_;
  std::size_t n_, p_, g_;
  GmmOptions options_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> vars_;
  std::vector<double> log_weights_;
  std::vector<double> log_prob_;
  std::vector<double> scratch_;
};

}  // namespace

Eigen::MatrixXd normalized_distances(const Eigen::MatrixXd& centroids) {
  const Eigen::Index g = centroids.rows();
  if (g < 1) throw DataError("normalized_distances needs at least one centroid");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g, g);
  double max_d = 0.0;
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index b = a + 1; b < g; ++b) {
      const double v = (centroids.row(a) - centroids.row(b)).norm();
      d(a, b) = d(b, a) = v;
      max_d = std::max(max_d, v);
    }
  }
  if (max_d > 0.0) d /= max_d;
  return d;
}

Partitioning make_partitioning(const Dataset& pool, std::vector<int> assignment,
                               std::size_t g) {
  if (assignment.size() != pool.size()) throw DataError("assignment size mismatch");
  if (g < 1) throw DataError("need at least one partition");
  const std::size_t p = pool.dim();
  const Standardized std_pool = Standardize(pool);

  Partitioning part;
  part.requested_g = g;
  part.sizes.assign(g, 0);
  part.remaining.assign(g, {});
  part.centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p));
  part.standardized_centroids = part.centroids;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int k = assignment[i];
    if (k < 0 || static_cast<std::size_t>(k) >= g) throw DataError("assignment out of range");
    const auto ku = static_cast<std::size_t>(k);
    ++part.sizes[ku];
    part.remaining[ku].push_back(i);
    auto x = pool.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      part.centroids(k, static_cast<Eigen::Index>(j)) += x[j];
      part.standardized_centroids(k, static_cast<Eigen::Index>(j)) += std_pool.z[i * p + j];
    }
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (part.sizes[k] == 0) continue;
    const double inv = 1.0 / static_cast<double>(part.sizes[k]);
    part.centroids.row(static_cast<Eigen::Index>(k)) *= inv;
    part.standardized_centroids.row(static_cast<Eigen::Index>(k)) *= inv;
  }
  part.dist = normalized_distances(part.standardized_centroids);

  double pool_br = 0.0;
  try {
    pool_br = base_rate_diff(pool);
  } catch (const GroupError&) {
    pool_br = 0.0;
  }
  part.delta_br.assign(g, pool_br);
  for (std::size_t k = 0; k < g; ++k) {
    std::size_t cells[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i : part.remaining[k]) {
      ++cells[pool.sensitive(i)][pool.label(i)];
    }
    const std::size_t n0 = cells[0][0] + cells[0][1];
    const std::size_t n1 = cells[1][0] + cells[1][1];
    const std::size_t pos = cells[0][1] + cells[1][1];
    const std::size_t neg = cells[0][0] + cells[1][0];
    if (n0 == 0 || n1 == 0 || pos == 0 || neg == 0) continue;
    part.delta_br[k] = static_cast<double>(cells[0][1]) / static_cast<double>(n0) -
                       static_cast<double>(cells[1][1]) / static_cast<double>(n1);
  }
  part.assignment = std::move(assignment);
  return part;
}

Partitioning fit_gmm(const Dataset& pool, std::size_t g, std::uint64_t seed,
                     const GmmOptions& options) {
  if (g < 1) throw ConfigError("fit_gmm: g must be >= 1");
  if (pool.size() < 5 * g) {
    throw DataError("fit_gmm: pool of " + std::to_string(pool.size()) +
                    " points is too small for " + std::to_string(g) + " components");
  }
  const std::size_t n = pool.size();
  const std::size_t p = pool.dim();
  const Standardized s = Standardize(pool);

  int reseeds = 0;
  std::size_t k = g;
  while (true) {
    for (int attempt = 0; attempt <= options.max_reseeds; ++attempt) {
      DiagonalMixture mixture(s.z, n, p, k, options);
      MixtureFit fit = mixture.Fit(seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL);
      const bool has_empty =
          std::find(fit.counts.begin(), fit.counts.end(), std::size_t{0}) != fit.counts.end();
      if (!has_empty) {
        Partitioning part = make_partitioning(pool, std::move(fit.assignment), k);
        part.requested_g = g;
        part.reseeds = reseeds;
        part.log_likelihood = fit.log_likelihood;
        return part;
      }
      ++reseeds;
    }
    // k == 1 can never leave a component empty, so this terminates.
    --k;
  }
}

double gmm_bic(const Partitioning& part, std::size_t n, std::size_t p) {
  const double params = static_cast<double>(part.g() * (2 * p + 1) - 1);
  return -2.0 * part.log_likelihood + params * std::log(static_cast<double>(n));
}

GSelection select_g(const Dataset& pool, std::size_t g_min, std::size_t g_max,
                    std::uint64_t seed, const GmmOptions& options) {
  if (g_min < 1 || g_max < g_min) throw ConfigError("select_g: empty or invalid g range");
  GSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = g_min; g <= g_max; ++g) {
    const Partitioning part = fit_gmm(pool, g, seed + g, options);
    const double bic = gmm_bic(part, pool.size(), pool.dim());
    sel.candidates.push_back(g);
    sel.bic.push_back(bic);
    if (bic < best) {
      best = bic;
      sel.g = g;
    }
  }
  return sel;
}

Partitioning partition_by_attribute(const Dataset& pool, const std::string& column) {
  const Attribute* attr = pool.attribute(column);
  if (attr == nullptr) throw SchemaError("partition attribute '" + column + "' not found");
  std::vector<int> present(attr->levels.size(), -1);
  int g = 0;
  for (int code : attr->codes) {
    if (present[static_cast<std::size_t>(code)] < 0) present[static_cast<std::size_t>(code)] = 0;
  }
  for (int& slot : present) {
    if (slot == 0) slot = g++;
  }
  if (g > 32) {
    throw DataError("attribute '" + column + "' has " + std::to_string(g) +
                    " values; at most 32 are supported");
  }
  if (g == 0) throw DataError("attribute '" + column + "' is empty");
  std::vector<int> assignment(attr->codes.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    assignment[i] = present[static_cast<std::size_t>(attr->codes[i])];
  }
  return make_partitioning(pool, std::move(assignment), static_cast<std::size_t>(g));
}

nlohmann::json Partitioning::to_json(const Dataset& pool) const {
  nlohmann::json j;
  j["g"] = g();
  j["requested_g"] = requested_g;
  j["reseeds"] = reseeds;
  j["log_likelihood"] = log_likelihood;
  std::vector<std::int64_t> ids(pool.ids().begin(), pool.ids().end());
  j["ids"] = ids;
  j["assignment"] = assignment;
  j["sizes"] = sizes;
  j["delta_br"] = delta_br;
  auto rows = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(m(r, c));
    }
    return out;
  };
  j["centroids"] = rows(centroids);
  j["standardized_centroids"] = rows(standardized_centroids);
  j["dist"] = rows(dist);
  return j;
}

}  // namespace fairacq
