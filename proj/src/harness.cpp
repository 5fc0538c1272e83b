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

#include "fairacq/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fairacq/errors.hpp"
#include "fairacq/fairness.hpp"

namespace fairacq {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SyntheticSpec ParseSynthetic(const json& j) {
  CheckKeys(j, {"preset", "n", "p", "privileged_fraction", "means", "variances",
                "base_rates"},
            "data.synthetic");
  SyntheticSpec s;
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset != "hiring") throw ConfigError("unknown synthetic preset '" + preset + "'");
    s = SyntheticSpec::hiring(0, 0);
  }
  if (j.contains("n")) s.n = j.at("n").get<std::size_t>();
  if (j.contains("p")) s.p = j.at("p").get<std::size_t>();
  if (j.contains("privileged_fraction")) {
    s.privileged_fraction = j.at("privileged_fraction").get<double>();
  }
  if (j.contains("means")) {
    const json& m = j.at("means");
    if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) {
      throw ConfigError("data.synthetic.means must be [[m00, m01], [m10, m11]]");
    }
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) s.means[a][b] = m[a][b].get<std::vector<double>>();
    }
  }
  if (j.contains("variances")) s.variances = j.at("variances").get<std::vector<double>>();
  if (j.contains("base_rates")) {
    const auto br = j.at("base_rates").get<std::vector<double>>();
    if (br.size() != 2) throw ConfigError("data.synthetic.base_rates needs two entries");
    s.base_rates = {br[0], br[1]};
  }
  s.validate();
  return s;
}

RewardVariant ParseReward(const std::string& s) {
  if (s == "base_rate_and_distance") return RewardVariant::kBaseRateAndDistance;
  if (s == "distance_only") return RewardVariant::kDistanceOnly;
  if (s == "base_rate_only") return RewardVariant::kBaseRateOnly;
  throw ConfigError("unknown reward variant '" + s + "'");
}

CountMode ParseCountMode(const std::string& s) {
  if (s == "positive_rewards") return CountMode::kPositiveRewards;
  if (s == "selections") return CountMode::kSelections;
  throw ConfigError("unknown count mode '" + s + "'");
}

ExperimentConfig ParseConfig(const json& j, const std::filesystem::path& base) {
  CheckKeys(j, {"seed", "method", "data", "split", "partitioner", "bandit", "model",
                "valuation", "exclude_sensitive", "validation_split", "output"},
            "config");
  ExperimentConfig c;
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("exclude_sensitive")) c.exclude_sensitive = j.at("exclude_sensitive").get<bool>();
  if (j.contains("validation_split")) c.validation_split = j.at("validation_split").get<bool>();

  if (j.contains("data")) {
    const json& d = j.at("data");
    CheckKeys(d, {"csv", "schema", "synthetic", "subsample"}, "data");
    if (d.contains("csv")) c.data.csv = Resolve(base, d.at("csv").get<std::string>());
    if (d.contains("schema")) {
      const json& s = d.at("schema");
      c.data.schema = s.is_string() ? load_schema(Resolve(base, s.get<std::string>()))
                                    : Schema::from_json(s);
    }
    if (d.contains("synthetic")) c.data.synthetic = ParseSynthetic(d.at("synthetic"));
    if (d.contains("subsample")) c.data.subsample = d.at("subsample").get<std::size_t>();
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    CheckKeys(s, {"ratios", "bias"}, "split");
    if (s.contains("ratios")) {
      const auto r = s.at("ratios").get<std::vector<int>>();
      if (r.size() != 3) throw ConfigError("split.ratios needs three entries");
      c.split.ratios = {r[0], r[1], r[2]};
    }
    if (s.contains("bias")) c.split.bias = s.at("bias").get<double>();
  }

  if (j.contains("partitioner")) {
    const json& p = j.at("partitioner");
    CheckKeys(p, {"kind", "g_min", "g_max", "g", "column", "max_iters", "tol",
                  "variance_floor", "max_reseeds"},
              "partitioner");
    const std::string kind = p.value("kind", std::string("gmm"));
    if (kind == "gmm") {
      c.partitioner.kind = PartitionerConfig::Kind::kGmm;
    } else if (kind == "fixed") {
      c.partitioner.kind = PartitionerConfig::Kind::kFixed;
    } else if (kind == "attribute") {
      c.partitioner.kind = PartitionerConfig::Kind::kAttribute;
    } else {
      throw ConfigError("unknown partitioner kind '" + kind + "'");
    }
    if (p.contains("g_min")) c.partitioner.g_min = p.at("g_min").get<std::size_t>();
    if (p.contains("g_max")) c.partitioner.g_max = p.at("g_max").get<std::size_t>();
    if (p.contains("g")) c.partitioner.g = p.at("g").get<std::size_t>();
    if (p.contains("column")) c.partitioner.attribute = p.at("column").get<std::string>();
    if (p.contains("max_iters")) c.partitioner.gmm.max_iters = p.at("max_iters").get<int>();
    if (p.contains("tol")) c.partitioner.gmm.tol = p.at("tol").get<double>();
    if (p.contains("variance_floor")) {
      c.partitioner.gmm.variance_floor = p.at("variance_floor").get<double>();
    }
    if (p.contains("max_reseeds")) c.partitioner.gmm.max_reseeds = p.at("max_reseeds").get<int>();
  }

  if (j.contains("bandit")) {
    const json& b = j.at("bandit");
    CheckKeys(b, {"alpha", "tau", "budget", "batch_size", "budget_frac", "batch_frac",
                  "max_iterations", "reward", "count_mode", "warm_start"},
              "bandit");
    if (b.contains("alpha")) c.bandit.alpha = b.at("alpha").get<double>();
    if (b.contains("tau")) c.bandit.tau = b.at("tau").get<double>();
    if (b.contains("budget")) c.bandit.budget = b.at("budget").get<std::size_t>();
    if (b.contains("batch_size")) c.bandit.batch_size = b.at("batch_size").get<std::size_t>();
    if (b.contains("budget_frac")) c.budget_frac = b.at("budget_frac").get<double>();
    if (b.contains("batch_frac")) c.batch_frac = b.at("batch_frac").get<double>();
    if (b.contains("max_iterations")) {
      c.bandit.max_iterations = b.at("max_iterations").get<std::size_t>();
    }
    if (b.contains("reward")) c.bandit.reward = ParseReward(b.at("reward").get<std::string>());
    if (b.contains("count_mode")) {
      c.bandit.count_mode = ParseCountMode(b.at("count_mode").get<std::string>());
    }
    if (b.contains("warm_start")) c.bandit.warm_start = b.at("warm_start").get<bool>();
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    CheckKeys(m, {"lambda", "tol", "max_newton_iters", "fit_intercept"}, "model");
    if (m.contains("lambda")) c.model.lambda = m.at("lambda").get<double>();
    if (m.contains("tol")) c.model.tol = m.at("tol").get<double>();
    if (m.contains("max_newton_iters")) {
      c.model.max_newton_iters = m.at("max_newton_iters").get<int>();
    }
    if (m.contains("fit_intercept")) c.model.fit_intercept = m.at("fit_intercept").get<bool>();
  }

  if (j.contains("valuation")) {
    const json& v = j.at("valuation");
    CheckKeys(v, {"ridge_lambda", "features", "refresh_every"}, "valuation");
    if (v.contains("ridge_lambda")) c.regressor.ridge_lambda = v.at("ridge_lambda").get<double>();
    if (v.contains("features")) {
      const std::string f = v.at("features").get<std::string>();
      if (f == "additive") {
        c.regressor.features = RegressorFeatures::kAdditive;
      } else if (f == "label_interacted") {
        c.regressor.features = RegressorFeatures::kLabelInteracted;
      } else {
        throw ConfigError("unknown regressor features '" + f + "'");
      }
    }
    if (v.contains("refresh_every")) c.refresh_every = v.at("refresh_every").get<std::size_t>();
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    CheckKeys(o, {"dir", "partitions", "influence"}, "output");
    if (o.contains("dir")) c.out_dir = Resolve(base, o.at("dir").get<std::string>());
    if (o.contains("partitions")) c.dump_partitions = o.at("partitions").get<bool>();
    if (o.contains("influence")) c.dump_influence = o.at("influence").get<bool>();
  }
  return c;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("failed writing " + path.string());
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RunSummary FromAcquisition(Method m, const AcquisitionResult& res, std::size_t g,
                           Clock::time_point start) {
  RunSummary s;
  s.method = method_name(m);
  s.initial_parity = res.initial_parity;
  s.initial_accuracy = res.initial_accuracy;
  s.final_parity = res.final_parity;
  s.final_accuracy = res.final_accuracy;
  s.acquired = res.acquired_ids.size();
  s.acquired_ids = res.acquired_ids;
  s.iterations = res.trace.size();
  s.accepted_batches = static_cast<std::size_t>(std::count_if(
      res.trace.begin(), res.trace.end(), [](const IterationRecord& r) { return r.accepted; }));
  s.budget = res.budget;
  s.batch_size = res.batch_size;
  s.partitions = g;
  s.stop_reason = res.stop_reason;
  s.trace = res.trace;
  fill_checkpoints(s);
  s.wall_seconds = Seconds(start);
  return s;
}

// Shared loop of the baselines: every batch is acquired and the model is
// retrained. `choose` returns K rows of `remaining` for the current model.
template <typename Chooser>
RunSummary RunUnconditional(Method m, const Dataset& train, const Dataset& test,
                            const Dataset& pool, const ExperimentConfig& config,
                            Chooser&& choose) {
  const auto start = Clock::now();
  if (pool.empty()) throw DataError("acquisition needs a non-empty pool");
  const BanditConfig cfg = config.resolved_bandit(pool.size());
  const std::size_t K = cfg.batch_size;

  RunSummary s;
  s.method = method_name(m);
  s.budget = cfg.budget;
  s.batch_size = K;

  Dataset current = train;
  TrainedModel model = fairacq::train(current, config.model);
  FairnessReport report = demographic_parity(model, test);
  s.initial_parity = report.parity;
  s.initial_accuracy = report.accuracy;

  std::vector<std::size_t> remaining(pool.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  std::size_t used = 0;
  std::size_t k = 0;
  while (true) {
    if (cfg.budget - used < K) {
      s.stop_reason = "budget";
      break;
    }
    if (remaining.size() < K) {
      s.stop_reason = "pool_exhausted";
      break;
    }
    if (k >= cfg.max_iterations) {
      s.stop_reason = "max_iterations";
      break;
    }
    const std::vector<std::size_t> batch = choose(model, remaining, K, rng);
    ++k;
    const std::unordered_set<std::size_t> drop(batch.begin(), batch.end());
    std::erase_if(remaining, [&](std::size_t r) { return drop.contains(r); });

    const double before = std::abs(report.parity);
    current = current.concat(pool.subset(batch));
    model = fairacq::train(current, config.model, cfg.warm_start ? &model.theta : nullptr);
    report = demographic_parity(model, test);
    used += K;

    IterationRecord rec;
    rec.iteration = k;
    rec.accepted = true;
    for (std::size_t r : batch) {
      rec.batch_ids.push_back(pool.id(r));
      s.acquired_ids.push_back(pool.id(r));
    }
    rec.candidate_parity = report.parity;
    rec.delta_improve = before - std::abs(report.parity);
    rec.parity = report.parity;
    rec.accuracy = report.accuracy;
    rec.budget_used = used;
    rec.budget_remaining = cfg.budget - used;
    s.trace.push_back(std::move(rec));
  }
  s.final_parity = report.parity;
  s.final_accuracy = report.accuracy;
  s.acquired = s.acquired_ids.size();
  s.iterations = s.trace.size();
  s.accepted_batches = s.iterations;
  fill_checkpoints(s);
  s.wall_seconds = Seconds(start);
  return s;
}

RunSummary RunBandit(Method m, const Dataset& train, const Dataset& test, const Dataset& pool,
                     const Partitioning& part_in, const ExperimentConfig& config,
                     RewardVariant reward, bool influence_sorted) {
  const auto start = Clock::now();
  BanditConfig cfg = config.resolved_bandit(pool.size());
  cfg.reward = reward;
  Partitioning part = part_in;
  AcquisitionResult res;
  if (influence_sorted) {
    const TrainedModel initial = fairacq::train(train, config.model);
    part = value_pool(initial, train, test, pool, part, config.regressor).sorted;
    TopKSampler sampler(part.g(), test, pool, config.regressor, config.refresh_every);
    res = run_acquisition(train, test, pool, part, config.model, cfg, sampler);
  } else {
    RandomSampler sampler;
    res = run_acquisition(train, test, pool, part, config.model, cfg, sampler);
  }
  return FromAcquisition(m, res, part.g(), start);
}

// Pool rows ordered by the regressor fitted on the initial model.
std::pair<std::vector<double>, std::vector<std::size_t>> InfluenceOrder(
    const Dataset& train, const Dataset& test, const Dataset& pool,
    const ExperimentConfig& config) {
  const TrainedModel initial = fairacq::train(train, config.model);
  const FairnessInfluence influence(initial, train, test);
  const std::vector<InfluenceScore> scores = influence.score_all(train);
  RegressorOptions opts = config.regressor;
  opts.fit_intercept = config.model.fit_intercept;
  const InfluenceRegressor reg = fit_influence_regressor(train, scores, opts);
  std::vector<double> predicted = reg.predict(pool);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (predicted[a] != predicted[b]) return predicted[a] > predicted[b];
    return pool.id(a) < pool.id(b);
  });
  return {std::move(predicted), std::move(order)};
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kRandom: return "random";
    case Method::kEntropy: return "entropy";
    case Method::kInf: return "inf";
    case Method::kAutoData: return "autodata";
    case Method::kDataSift: return "datasift";
    case Method::kDataSiftInf: return "datasift-inf";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kRandom, Method::kEntropy, Method::kInf, Method::kAutoData,
                   Method::kDataSift, Method::kDataSiftInf}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name +
                    "' (expected random, entropy, inf, autodata, datasift or datasift-inf)");
}

bool is_bandit_method(Method m) {
  return m == Method::kAutoData || m == Method::kDataSift || m == Method::kDataSiftInf;
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void ExperimentConfig::validate() const {
  const int sources = (data.csv ? 1 : 0) + (data.synthetic ? 1 : 0);
  if (sources != 1) throw ConfigError("exactly one of data.csv or data.synthetic is required");
  if (data.csv && !data.schema) throw ConfigError("data.csv needs data.schema");
  if (split.ratios[0] <= 0 || split.ratios[1] <= 0 || split.ratios[2] <= 0) {
    throw ConfigError("split ratios must be positive");
  }
  if (!(split.bias > 0.0 && split.bias <= 1.0)) throw ConfigError("split.bias must be in (0, 1]");
  if (!(budget_frac > 0.0 && budget_frac <= 1.0)) throw ConfigError("budget_frac must be in (0, 1]");
  if (!(batch_frac > 0.0 && batch_frac <= 1.0)) throw ConfigError("batch_frac must be in (0, 1]");
  if (!(bandit.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(bandit.tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (!(regressor.ridge_lambda > 0.0)) throw ConfigError("ridge_lambda must be > 0");
  model.validate();
  if (is_bandit_method(method)) {
    switch (partitioner.kind) {
      case PartitionerConfig::Kind::kGmm:
        if (partitioner.g_min < 1 || partitioner.g_max < partitioner.g_min) {
          throw ConfigError("partitioner needs 1 <= g_min <= g_max");
        }
        break;
      case PartitionerConfig::Kind::kFixed:
        if (partitioner.g < 1) throw ConfigError("partitioner.g must be >= 1");
        break;
      case PartitionerConfig::Kind::kAttribute:
        if (partitioner.attribute.empty()) throw ConfigError("partitioner.column is required");
        break;
    }
  }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir) {
  try {
    return ParseConfig(j, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

BanditConfig ExperimentConfig::resolved_bandit(std::size_t pool_size) const {
  BanditConfig b = bandit;
  if (b.budget == 0) {
    b.budget = static_cast<std::size_t>(
        std::ceil(budget_frac * static_cast<double>(pool_size) - 1e-9));
  }
  if (b.batch_size == 0) {
    b.batch_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(batch_frac * static_cast<double>(b.budget) - 1e-9)));
  }
  b.seed = derive_seed(seed, SeedStream::kSampler);
  return b.resolved(pool_size);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j, path.parent_path());
}

std::optional<std::size_t> RunSummary::budget_to_reach(double threshold) const {
  if (std::abs(initial_parity) <= threshold) return 0;
  for (const IterationRecord& r : trace) {
    if (std::abs(r.parity) <= threshold) return r.budget_used;
  }
  return std::nullopt;
}

json RunSummary::to_json() const {
  json cps = json::array();
  for (const Checkpoint& c : checkpoints) {
    cps.push_back({{"fraction", c.fraction},
                   {"budget_used", c.budget_used},
                   {"parity", c.parity},
                   {"accuracy", c.accuracy}});
  }
  return {{"schema", 1},
          {"method", method},
          {"initial_parity", initial_parity},
          {"initial_accuracy", initial_accuracy},
          {"final_parity", final_parity},
          {"final_accuracy", final_accuracy},
          {"checkpoints", cps},
          {"acquired", acquired},
          {"iterations", iterations},
          {"accepted_batches", accepted_batches},
          {"budget", budget},
          {"batch_size", batch_size},
          {"partitions", partitions},
          {"wall_seconds", wall_seconds},
          {"stop_reason", stop_reason},
          {"holdout_parity", holdout_parity ? json(*holdout_parity) : json(nullptr)},
          {"holdout_accuracy", holdout_accuracy ? json(*holdout_accuracy) : json(nullptr)},
          {"acquired_ids", acquired_ids}};
}

void fill_checkpoints(RunSummary& s) {
  s.checkpoints.clear();
  std::size_t next = 0;
  double parity = s.initial_parity;
  double acc = s.initial_accuracy;
  for (int c = 0; c <= 10; ++c) {
    const std::size_t level = s.budget * static_cast<std::size_t>(c) / 10;
    while (next < s.trace.size() && s.trace[next].budget_used <= level) {
      parity = s.trace[next].parity;
      acc = s.trace[next].accuracy;
      ++next;
    }
    s.checkpoints.push_back({c / 10.0, level, parity, acc});
  }
}

RunSummary run_random(const Dataset& train, const Dataset& test, const Dataset& pool,
                      const ExperimentConfig& config) {
  return RunUnconditional(
      Method::kRandom, train, test, pool, config,
      [](const TrainedModel&, const std::vector<std::size_t>& remaining, std::size_t k,
         std::mt19937_64& rng) {
        std::vector<std::size_t> batch;
        batch.reserve(k);
        std::sample(remaining.begin(), remaining.end(), std::back_inserter(batch), k, rng);
        return batch;
      });
}

RunSummary run_entropy(const Dataset& train, const Dataset& test, const Dataset& pool,
                       const ExperimentConfig& config) {
  return RunUnconditional(
      Method::kEntropy, train, test, pool, config,
      [&](const TrainedModel& model, const std::vector<std::size_t>& remaining, std::size_t k,
          std::mt19937_64&) {
        const std::vector<double> prob = predict_proba(model, pool);
        std::vector<double> h(pool.size(), 0.0);
        for (std::size_t r : remaining) h[r] = entropy(prob[r]);
        std::vector<std::size_t> order = remaining;
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(), [&](std::size_t a, std::size_t b) {
                            if (h[a] != h[b]) return h[a] > h[b];
                            return pool.id(a) < pool.id(b);
                          });
        order.resize(k);
        return order;
      });
}

RunSummary run_inf(const Dataset& train, const Dataset& test, const Dataset& pool,
                   const ExperimentConfig& config) {
  if (pool.empty()) throw DataError("acquisition needs a non-empty pool");
  const std::vector<std::size_t> order = InfluenceOrder(train, test, pool, config).second;
  std::size_t cursor = 0;
  return RunUnconditional(Method::kInf, train, test, pool, config,
                          [&](const TrainedModel&, const std::vector<std::size_t>&,
                              std::size_t k, std::mt19937_64&) {
                            std::vector<std::size_t> batch(
                                order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                order.begin() + static_cast<std::ptrdiff_t>(cursor + k));
                            cursor += k;
                            return batch;
                          });
}

RunSummary run_autodata(const Dataset& train, const Dataset& test, const Dataset& pool,
                        const Partitioning& part, const ExperimentConfig& config) {
  return RunBandit(Method::kAutoData, train, test, pool, part, config,
                   RewardVariant::kDistanceOnly, false);
}

RunSummary run_datasift(const Dataset& train, const Dataset& test, const Dataset& pool,
                        const Partitioning& part, const ExperimentConfig& config) {
  return RunBandit(Method::kDataSift, train, test, pool, part, config, config.bandit.reward,
                   false);
}

RunSummary run_datasift_inf(const Dataset& train, const Dataset& test, const Dataset& pool,
                            const Partitioning& part, const ExperimentConfig& config) {
  return RunBandit(Method::kDataSiftInf, train, test, pool, part, config, config.bandit.reward,
                   true);
}

RunSummary run_method(const Dataset& train, const Dataset& test, const Dataset& pool,
                      const Partitioning* part, const ExperimentConfig& config) {
  if (is_bandit_method(config.method) && part == nullptr) {
    throw ConfigError(method_name(config.method) + " needs a partitioning");
  }
  switch (config.method) {
    case Method::kRandom: return run_random(train, test, pool, config);
    case Method::kEntropy: return run_entropy(train, test, pool, config);
    case Method::kInf: return run_inf(train, test, pool, config);
    case Method::kAutoData: return run_autodata(train, test, pool, *part, config);
    case Method::kDataSift: return run_datasift(train, test, pool, *part, config);
    case Method::kDataSiftInf: return run_datasift_inf(train, test, pool, *part, config);
  }
  throw ConfigError("unhandled method");
}

Dataset load_data(const ExperimentConfig& config) {
  Dataset data;
  if (config.data.csv) {
    data = load_csv(*config.data.csv, *config.data.schema);
  } else if (config.data.synthetic) {
    SyntheticSpec spec = *config.data.synthetic;
    spec.seed = derive_seed(config.seed, SeedStream::kData);
    data = synthesize(spec);
  } else {
    throw ConfigError("no data source configured");
  }
  if (config.data.subsample > 0 && config.data.subsample < data.size()) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, SeedStream::kData));
    std::vector<std::size_t> keep;
    std::sample(rows.begin(), rows.end(), std::back_inserter(keep), config.data.subsample, rng);
    data = data.subset(keep);
  }
  if (config.exclude_sensitive && data.sensitive_feature()) {
    data = data.without_feature(*data.sensitive_feature());
  }
  return data;
}

Partitioning build_partitioning(const Dataset& pool, const ExperimentConfig& config) {
  const PartitionerConfig& pc = config.partitioner;
  const std::uint64_t seed = derive_seed(config.seed, SeedStream::kPartition);
  switch (pc.kind) {
    case PartitionerConfig::Kind::kAttribute:
      return partition_by_attribute(pool, pc.attribute);
    case PartitionerConfig::Kind::kFixed:
      return fit_gmm(pool, pc.g, seed, pc.gmm);
    case PartitionerConfig::Kind::kGmm: {
      const std::size_t cap = std::max<std::size_t>(1, pool.size() / 5);
      const std::size_t g_max = std::min(pc.g_max, cap);
      const std::size_t g_min = std::min(pc.g_min, g_max);
      const GSelection sel = select_g(pool, g_min, g_max, seed, pc.gmm);
      return fit_gmm(pool, sel.g, seed + sel.g, pc.gmm);
    }
  }
  throw ConfigError("unhandled partitioner");
}

RunSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset data = load_data(config);
  SplitSpec split_spec = config.split;
  split_spec.seed = derive_seed(config.seed, SeedStream::kSplit);
  Split parts = split(data, split_spec);

  Dataset holdout;
  if (config.validation_split) {
    std::vector<std::size_t> rows(parts.test.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, SeedStream::kSplit) + 1);
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t half = rows.size() / 2;
    const std::vector<std::size_t> val(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<std::size_t> rest(rows.begin() + static_cast<std::ptrdiff_t>(half), rows.end());
    holdout = parts.test.subset(rest);
    parts.test = parts.test.subset(val);
    group_stats(parts.test);  // both halves need both groups
    group_stats(holdout);
  }

  std::optional<Partitioning> part;
  if (is_bandit_method(config.method)) part = build_partitioning(parts.pool, config);
  RunSummary summary =
      run_method(parts.train, parts.test, parts.pool, part ? &*part : nullptr, config);

  if (config.validation_split) {
    const std::unordered_set<std::int64_t> acquired(summary.acquired_ids.begin(),
                                                    summary.acquired_ids.end());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < parts.pool.size(); ++i) {
      if (acquired.contains(parts.pool.id(i))) rows.push_back(i);
    }
    const TrainedModel final_model =
        fairacq::train(parts.train.concat(parts.pool.subset(rows)), config.model);
    const FairnessReport report = demographic_parity(final_model, holdout);
    summary.holdout_parity = report.parity;
    summary.holdout_accuracy = report.accuracy;
  }

  if (!config.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create " + config.out_dir.string() + ": " + ec.message());
    WriteFile(config.out_dir / "trace.csv", trace_csv(summary));
    WriteFile(config.out_dir / "summary.json", summary.to_json().dump(2) + "\n");
    if (part && config.dump_partitions) {
      WriteFile(config.out_dir / "partitions.json", part->to_json(parts.pool).dump(2) + "\n");
    }
    if (config.dump_influence &&
        (config.method == Method::kInf || config.method == Method::kDataSiftInf)) {
      const auto predicted = InfluenceOrder(parts.train, parts.test, parts.pool, config).first;
      std::ostringstream out;
      out << "id,predicted_score\n";
      for (std::size_t i = 0; i < parts.pool.size(); ++i) {
        out << parts.pool.id(i) << ',' << FormatDouble(predicted[i]) << '\n';
      }
      WriteFile(config.out_dir / "influence.csv", out.str());
    }
  }
  return summary;
}

std::string trace_csv(const RunSummary& s) {
  std::ostringstream out;
  out << "iter,method,arm,accepted,batch_size,parity,accuracy,budget_used,delta_improve\n";
  for (const IterationRecord& r : s.trace) {
    out << r.iteration << ',' << s.method << ',' << r.arm << ',' << (r.accepted ? 1 : 0) << ','
        << r.batch_ids.size() << ',' << FormatDouble(r.parity) << ','
        << FormatDouble(r.accuracy) << ',' << r.budget_used << ','
        << FormatDouble(r.delta_improve) << '\n';
  }
  return out.str();
}

BruteForceResult brute_force_best_batch(const Dataset& train, const Dataset& test,
                                        const Dataset& pool, std::size_t k,
                                        const TrainConfig& config) {
  const std::size_t n = pool.size();
  if (k == 0 || k > n) throw ConfigError("brute force needs 1 <= K <= |pool|");
  double combos = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  if (combos > 1e6 + 0.5) throw ConfigError("brute force limited to C(N, K) <= 1e6");

  BruteForceResult best;
  best.parity = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    const Dataset candidate = train.concat(pool.subset(idx));
    try {
      const TrainedModel model = fairacq::train(candidate, config);
      const double parity = demographic_parity(model, test).parity;
      if (std::abs(parity) < std::abs(best.parity)) {
        best.parity = parity;
        best.ids.clear();
        for (std::size_t r : idx) best.ids.push_back(pool.id(r));
      }
    } catch (const NumericError&) {
      // An unfittable subset is simply not a candidate.
    }
    ++best.evaluated;

    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (best.ids.empty()) throw NumericError("no subset could be fitted");
  return best;
}

}  // namespace fairacq
