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

// fairacq: run one acquisition experiment from a JSON config.
//
//   fairacq --config exp.json [--method datasift-inf] [--seed 3] [--out dir]
//   fairacq --config exp.json --seeds 1,2,3,4,5

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fairacq/errors.hpp"
#include "fairacq/harness.hpp"

namespace {

int ExitCode(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const fairacq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fairacq::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const fairacq::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

void PrintSummary(const fairacq::RunSummary& s, std::uint64_t seed) {
  std::cout << s.method << " seed=" << seed << " parity " << s.initial_parity << " -> "
            << s.final_parity << ", accuracy " << s.initial_accuracy << " -> "
            << s.final_accuracy << ", acquired " << s.acquired << "/" << s.budget << " in "
            << s.iterations << " iterations (" << s.stop_reason << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware data acquisition experiments"};
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget_frac, batch_frac, alpha, tau;
  std::optional<std::size_t> g;
  std::optional<std::string> out;
  std::vector<std::uint64_t> seeds;

  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--method", method,
                 "random, entropy, inf, autodata, datasift or datasift-inf");
  app.add_option("--seed", seed, "Experiment seed");
  app.add_option("--budget-frac", budget_frac, "Budget as a fraction of the pool");
  app.add_option("--batch-frac", batch_frac, "Batch size as a fraction of the budget");
  app.add_option("--alpha", alpha, "UCB exploration weight");
  app.add_option("--tau", tau, "Early-stop parity threshold");
  app.add_option("--g", g, "Fixed number of partitions (skips BIC selection)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--seeds", seeds, "Run independent replicas, e.g. 1,2,3")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  fairacq::ExperimentConfig config;
  try {
    config = fairacq::load_config(config_path);
    if (method) config.method = fairacq::parse_method(*method);
    if (seed) config.seed = *seed;
    if (budget_frac) config.budget_frac = *budget_frac;
    if (batch_frac) config.batch_frac = *batch_frac;
    if (alpha) config.bandit.alpha = *alpha;
    if (tau) config.bandit.tau = *tau;
    if (g) {
      config.partitioner.kind = fairacq::PartitionerConfig::Kind::kFixed;
      config.partitioner.g = *g;
    }
    if (out) config.out_dir = *out;
    config.validate();
  } catch (...) {
    return ExitCode(std::current_exception());
  }

  if (seeds.empty()) {
    try {
      PrintSummary(fairacq::run_experiment(config), config.seed);
      return 0;
    } catch (...) {
      return ExitCode(std::current_exception());
    }
  }

  // Replicas share nothing but the read-only base config.
  std::vector<std::optional<fairacq::RunSummary>> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        fairacq::ExperimentConfig replica = config;
        replica.seed = seeds[i];
        if (!replica.out_dir.empty()) {
          replica.out_dir = config.out_dir / ("seed-" + std::to_string(seeds[i]));
        }
        results[i] = fairacq::run_experiment(replica);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();

  int code = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (errors[i]) {
      const int c = ExitCode(errors[i]);
      if (code == 0) code = c;
    } else {
      PrintSummary(*results[i], seeds[i]);
    }
  }
  return code;
}
