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

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brdp/math_util.hpp"
#include "brdp/rng.hpp"

namespace brdp {

// Discrete-time controlled system: dynamics x_{t+1} = f(t, x_t, u_t, noise),
// per-step costs, horizon, and an initial-state sampler. Dynamics must be
// deterministic when `noise` is null. Costs are nonnegative; absorbing
// failure sets may return +inf as a sentinel.
struct ControlSystem {
  int state_dim = 0;
  int input_dim = 0;
  int horizon = 0;
  std::function<Vec(int t, const Vec& x, const Vec& u, Rng* noise)> dynamics;
  std::function<double(int t, const Vec& x, const Vec& u)> stage_cost;
  std::function<double(const Vec& x)> terminal_cost;
  std::function<Vec(Rng&)> sample_initial;
};

// Noisy state-estimate channel x_hat ~ X_hat(x). With zero noise scale the
// sample must equal x exactly.
struct Estimator {
  std::function<Vec(const Vec& x, Rng&)> sample;
  std::string description;
};

Estimator exact_estimator();

// Per-step stochastic controller u ~ policy(t, x_est). Implementations that
// keep internal plans (receding-horizon wrappers) get a fresh instance per
// rollout via PolicyFactory.
class StepPolicy {
 public:
  virtual ~StepPolicy() = default;
  virtual Vec sample(int t, const Vec& x_est, Rng& rng) = 0;
};

using PolicyFactory = std::function<std::unique_ptr<StepPolicy>()>;

// Adapts a stateless sampling function to StepPolicy.
PolicyFactory make_policy_factory(
    std::function<Vec(int t, const Vec& x_est, Rng& rng)> fn);

struct Trajectory {
  std::vector<Vec> states;     // t_f + 1 entries
  std::vector<Vec> estimates;  // t_f entries (no estimate at the terminal state)
  std::vector<Vec> inputs;     // t_f entries
  double total_cost = 0.0;     // +inf sentinel for absorbing-failure runs

  // Recomputes c_0 + ... + c_{t_f} from the stored states/inputs.
  double recompute_cost(const ControlSystem& system) const;
};

struct CostSummary {
  double mean = 0.0;
  double stddev = 0.0;
  int n_trials = 0;
  double failure_fraction = 0.0;  // fraction of +inf-cost trials, excluded from mean
  bool mean_defined = true;       // false when every trial failed
};

class DivergedTrajectoryError : public std::runtime_error {
 public:
  DivergedTrajectoryError(int step, const std::string& what)
      : std::runtime_error(what), step(step) {}
  int step;
};

// Whether the controller is fed the state estimate (the online problem) or
// the true state (the offline problem, with estimates still drawn so that
// estimation error can be measured without being used for feedback).
enum class FeedbackMode { estimate, true_state };

Trajectory rollout(const ControlSystem& system, StepPolicy& policy,
                   const Estimator& estimator, TrialRngs& rngs,
                   FeedbackMode mode = FeedbackMode::estimate);

// Per-trial costs from independent seeded rollouts; trial i always uses the
// rng streams derived from (seed, i), so results are identical for any thread
// count and pair up across configurations run with the same seed.
std::vector<double> monte_carlo_trial_costs(const ControlSystem& system,
                                            const PolicyFactory& make_policy,
                                            const Estimator& estimator, int n_trials,
                                            std::uint64_t seed, int n_threads = 1,
                                            FeedbackMode mode = FeedbackMode::estimate);

CostSummary summarize_costs(const std::vector<double>& costs);

CostSummary monte_carlo_cost(const ControlSystem& system, const PolicyFactory& make_policy,
                             const Estimator& estimator, int n_trials, std::uint64_t seed,
                             int n_threads = 1,
                             FeedbackMode mode = FeedbackMode::estimate);

// JSON-lines trajectory dump: one object per line with fields
// `states`, `estimates`, `inputs` (arrays of per-step arrays) and `cost`.
void dump_trajectories_jsonl(std::ostream& out, const std::vector<Trajectory>& trajectories);

}  // namespace brdp
