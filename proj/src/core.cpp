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

#include "brdp/core.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "brdp/parallel.hpp"

namespace brdp {

Estimator exact_estimator() {
  return Estimator{[](const Vec& x, Rng&) { return x; }, "exact"};
}

namespace {

class FunctionPolicy : public StepPolicy {
 public:
  explicit FunctionPolicy(std::function<Vec(int, const Vec&, Rng&)> fn)
      : fn_(std::move(fn)) {}
  Vec sample(int t, const Vec& x_est, Rng& rng) override { return fn_(t, x_est, rng); }

 private:
  std::function<Vec(int, const Vec&, Rng&)> fn_;
};

}  // namespace

PolicyFactory make_policy_factory(std::function<Vec(int, const Vec&, Rng&)> fn) {
  return [fn = std::move(fn)] { return std::make_unique<FunctionPolicy>(fn); };
}

double Trajectory::recompute_cost(const ControlSystem& system) const {
  double total = 0.0;
  for (int t = 0; t < system.horizon; ++t) {
    total += system.stage_cost(t, states[t], inputs[t]);
  }
  total += system.terminal_cost(states[system.horizon]);
  return total;
}

Trajectory rollout(const ControlSystem& system, StepPolicy& policy,
                   const Estimator& estimator, TrialRngs& rngs, FeedbackMode mode) {
  Trajectory traj;
  traj.states.reserve(system.horizon + 1);
  traj.estimates.reserve(system.horizon);
  traj.inputs.reserve(system.horizon);

  Vec x = system.sample_initial(rngs.init);
  if (!all_finite(x)) {
    throw DivergedTrajectoryError(0, "non-finite initial state");
  }
  traj.states.push_back(x);

  double total = 0.0;
  for (int t = 0; t < system.horizon; ++t) {
    const Vec x_hat = estimator.sample(x, rngs.estimator);
    const Vec& feedback = (mode == FeedbackMode::estimate) ? x_hat : x;
    const Vec u = policy.sample(t, feedback, rngs.policy);
    total += system.stage_cost(t, x, u);
    x = system.dynamics(t, x, u, &rngs.process);
    if (!all_finite(x)) {
      throw DivergedTrajectoryError(
          t, "non-finite state after dynamics step " + std::to_string(t));
    }
    traj.estimates.push_back(x_hat);
    traj.inputs.push_back(u);
    traj.states.push_back(x);
  }
  total += system.terminal_cost(x);
  traj.total_cost = total;
  return traj;
}

std::vector<double> monte_carlo_trial_costs(const ControlSystem& system,
                                            const PolicyFactory& make_policy,
                                            const Estimator& estimator, int n_trials,
                                            std::uint64_t seed, int n_threads,
                                            FeedbackMode mode) {
  if (n_trials < 1) {
    throw std::invalid_argument("monte_carlo_trial_costs: n_trials must be >= 1");
  }
  std::vector<double> costs(n_trials);
  parallel_for(n_trials, n_threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(seed, static_cast<std::uint64_t>(i));
    auto policy = make_policy();
    costs[i] = rollout(system, *policy, estimator, rngs, mode).total_cost;
  });
  return costs;
}

CostSummary summarize_costs(const std::vector<double>& costs) {
  CostSummary s;
  s.n_trials = static_cast<int>(costs.size());
  int n_ok = 0;
  double sum = 0.0;
  for (double c : costs) {
    if (std::isinf(c)) continue;
    ++n_ok;
    sum += c;
  }
  s.failure_fraction = static_cast<double>(s.n_trials - n_ok) / s.n_trials;
  if (n_ok == 0) {
    s.mean_defined = false;
    s.mean = std::nan("");
    s.stddev = std::nan("");
    return s;
  }
  s.mean = sum / n_ok;
  double ss = 0.0;
  for (double c : costs) {
    if (std::isinf(c)) continue;
    ss += (c - s.mean) * (c - s.mean);
  }
  s.stddev = n_ok > 1 ? std::sqrt(ss / (n_ok - 1)) : 0.0;
  return s;
}

CostSummary monte_carlo_cost(const ControlSystem& system, const PolicyFactory& make_policy,
                             const Estimator& estimator, int n_trials, std::uint64_t seed,
                             int n_threads, FeedbackMode mode) {
  return summarize_costs(
      monte_carlo_trial_costs(system, make_policy, estimator, n_trials, seed, n_threads, mode));
}

void dump_trajectories_jsonl(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const Trajectory& traj : trajectories) {
    nlohmann::json line;
    auto rows = [](const std::vector<Vec>& vs) {
      nlohmann::json arr = nlohmann::json::array();
      for (const Vec& v : vs) {
        arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      }
      return arr;
    };
    line["states"] = rows(traj.states);
    line["estimates"] = rows(traj.estimates);
    line["inputs"] = rows(traj.inputs);
    line["cost"] = traj.total_cost;
    out << line.dump() << "\n";
  }
}

}  // namespace brdp
