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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "brdp/config.hpp"
#include "brdp/core.hpp"
#include "brdp/dp_cert.hpp"
#include "brdp/lqg_br.hpp"
#include "brdp/samplers.hpp"
#include "brdp/systems.hpp"

namespace brdp {

// Reproducible experiment harness for the three benchmark scenarios:
// importance-sampled planning in the double-slit world, bounded-rational LQG
// on the linearized quadrotor, and Stein-variational MPC on the nonlinear
// quadrotor, each swept over (beta, sigma2) cells with common random numbers.

inline constexpr const char* kExperimentDoubleSlit = "double-slit";
inline constexpr const char* kExperimentLqg = "lqg-quadrotor";
inline constexpr const char* kExperimentSvmpc = "svmpc-quadrotor";

struct ExperimentSettings {
  std::string experiment;
  std::vector<double> betas;  // finite grid, ascending
  bool include_inf = true;    // adds the beta = inf (LQR / argmin) rows
  std::vector<double> sigma2_list;
  int n_trials = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;
  int dump_trajectories = 0;

  // shared quadrotor setup
  QuadrotorParams quad;
  double q_scale = 1.0;
  double r_scale = 0.1;
  double qf_scale = 1.0;
  double prior_ridge = 1e-8;

  // double-slit setup
  SlitGeometry slit;
  int is_samples = 8192;
  int replan_every = 0;  // 0 means open loop (solve once per trial)

  // SV-MPC setup
  int svgd_particles = 16;
  int svgd_iterations = 150;
  double svgd_step = 0.1;
  double svgd_overshoot_tol = 0.02;
  double svgd_bandwidth = 0.0;  // <= 0: median heuristic

  // certification (lqg experiment only)
  bool certify = false;
  double cert_quantile = 0.99;
  int cert_level_samples = 400;
  int cert_gamma_samples = 400;
  int bound_samples = 1000;

  static ExperimentSettings from_config(const Config& cfg);
};

// Baked-in defaults per experiment id, the same ones shipped in configs/.
Config default_config(const std::string& experiment);

struct SweepRow {
  std::string experiment;
  double beta = 0.0;  // +inf for the baseline row
  double sigma2 = 0.0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double failure_fraction = 0.0;
  int n_trials = 0;
  bool is_beta_star = false;
  std::optional<double> bound;  // Theorem-style delta-J bound when certified

  // extra diagnostics carried to the JSON output only
  double wide_fraction = std::nan("");
  int wide_count = -1;
  int passage_count = -1;  // wide + narrow among accepted rollouts
  double ess_mean = std::nan("");
  double gamma = std::nan("");
  double delta_j = std::nan("");
  double delta_j_ci95 = std::nan("");
  double bound_ci95 = std::nan("");
  double j_off_mean = std::nan("");
};

struct SweepResult {
  std::vector<SweepRow> rows;  // beta ascending, then sigma2
};

// Runs every (beta, sigma2) cell and, when out_dir is set, persists
// results.csv, results.json, and trajectory samples.
SweepResult run_experiment(const ExperimentSettings& settings);

struct PairedRow {
  std::string experiment;
  double beta = 0.0;
  double sigma2 = 0.0;
  double mean_diff = 0.0;  // finite-beta cost minus baseline cost, paired
  double se_diff = 0.0;
  double ci95 = 0.0;
  int n_trials = 0;
};

// Paired finite-beta vs baseline (beta = inf) differences under identical
// seeds; writes paired.csv when out_dir is set.
std::vector<PairedRow> compare_baseline(const ExperimentSettings& settings);

// CSV with schema experiment,beta,sigma2,mean_cost,std_cost,
// failure_fraction,n_trials,is_beta_star,bound; 17 significant digits,
// beta = inf spelled "inf", bound empty when absent.
std::string sweep_to_csv(const SweepResult& result);
SweepResult sweep_from_csv(const std::string& text);

std::string paired_to_csv(const std::vector<PairedRow>& rows);

}  // namespace brdp
