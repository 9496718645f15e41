// Copyright 2026 The brdp Authors
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

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "brdp/bench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;

void apply_common_overrides(brdp::Config& cfg, const std::string& out, int threads,
                            long long seed) {
  if (!out.empty()) cfg.set("out", out);
  if (threads > 0) cfg.set("threads", std::to_string(threads));
  if (seed >= 0) cfg.set("seed", std::to_string(seed));
}

int run_settings(const brdp::ExperimentSettings& settings, bool with_baseline) {
  const brdp::SweepResult result = brdp::run_experiment(settings);
  std::cout << brdp::sweep_to_csv(result);
  if (with_baseline) {
    const auto paired = brdp::compare_baseline(settings);
    std::cout << brdp::paired_to_csv(paired);
  }
  if (!settings.out_dir.empty()) {
    std::cerr << "results written to " << settings.out_dir << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded-rational control benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  long long seed = -1;
  bool with_baseline = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (BRDP_THREADS overrides)");
  run->add_option("--seed", seed, "seed override");
  run->add_flag("--baseline", with_baseline, "also emit the paired baseline table");

  std::string experiment;
  std::string beta_spec;
  std::string sigma_spec;
  int trials = 0;

  CLI::App* sweep = app.add_subcommand("sweep", "sweep from the built-in defaults");
  sweep->add_option("--experiment", experiment, "double-slit | lqg-quadrotor | svmpc-quadrotor")
      ->required();
  sweep->add_option("--beta", beta_spec, "log grid min:max:count");
  sweep->add_option("--sigma", sigma_spec, "comma-separated sigma2 list");
  sweep->add_option("--trials", trials, "trials per cell");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--threads", threads, "worker threads (BRDP_THREADS overrides)");
  sweep->add_option("--seed", seed, "seed override");
  sweep->add_flag("--baseline", with_baseline, "also emit the paired baseline table");

  CLI11_PARSE(app, argc, argv);

  try {
    brdp::Config cfg;
    if (run->parsed()) {
      cfg = brdp::Config::parse_file(config_path);
    } else {
      cfg = brdp::default_config(experiment);
      if (!beta_spec.empty()) cfg.set("beta.grid", beta_spec);
      if (!sigma_spec.empty()) cfg.set("sigma2", sigma_spec);
      if (trials > 0) cfg.set("trials", std::to_string(trials));
    }
    apply_common_overrides(cfg, out_dir, threads, seed);
    const auto settings = brdp::ExperimentSettings::from_config(cfg);
    return run_settings(settings, with_baseline);
  } catch (const brdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}
