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

#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brdp/core.hpp"
#include "brdp/math_util.hpp"

namespace brdp {

// Cost of an input sequence over the remaining horizon, evaluated by a
// deterministic rollout. +inf marks absorbing-failure sequences.
class TrajectoryHamiltonian {
 public:
  virtual ~TrajectoryHamiltonian() = default;
  virtual int sequence_length() const = 0;
  virtual int input_dim() const = 0;
  virtual double evaluate(const std::vector<Vec>& u_seq) const = 0;

  // Gradient with respect to each input. The default is central differences
  // with step 1e-5; subclasses with analytic structure should override.
  virtual std::vector<Vec> gradient(const std::vector<Vec>& u_seq) const;
};

// Analytic derivatives of a ControlSystem's step map and costs, enough for
// the adjoint (backward) gradient of a rollout cost.
struct StepDerivatives {
  std::function<void(int t, const Vec& x, const Vec& u, Mat& A, Mat& B)> dynamics_jac;
  std::function<Vec(int t, const Vec& x, const Vec& u)> stage_cost_dx;
  std::function<Vec(int t, const Vec& x, const Vec& u)> stage_cost_du;
  std::function<Vec(const Vec& x)> terminal_cost_dx;
};

// Cost-to-go from (t0, x0) to the system horizon.
class CostToGoHamiltonian : public TrajectoryHamiltonian {
 public:
  CostToGoHamiltonian(const ControlSystem& system, int t0, Vec x0);
  CostToGoHamiltonian(const ControlSystem& system, int t0, Vec x0, StepDerivatives derivs);

  int sequence_length() const override { return system_->horizon - t0_; }
  int input_dim() const override { return system_->input_dim; }
  double evaluate(const std::vector<Vec>& u_seq) const override;
  std::vector<Vec> gradient(const std::vector<Vec>& u_seq) const override;

 private:
  const ControlSystem* system_;
  int t0_;
  Vec x0_;
  bool has_derivs_ = false;
  StepDerivatives derivs_;
};

// Independent per-step Gaussian prior over input sequences.
struct SequencePrior {
  std::vector<GaussianDist> steps;

  int length() const { return static_cast<int>(steps.size()); }
  int input_dim() const { return steps.empty() ? 0 : steps.front().dim(); }
  std::vector<Vec> sample(Rng& rng) const;
  double log_density(const std::vector<Vec>& u_seq) const;
};

class InfeasibleProposalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NonFiniteGradientError : public std::runtime_error {
 public:
  NonFiniteGradientError(int particle, int iteration)
      : std::runtime_error("non-finite SVGD gradient at particle " +
                           std::to_string(particle) + ", iteration " +
                           std::to_string(iteration)),
        particle(particle), iteration(iteration) {}
  int particle;
  int iteration;
};

class OvershootError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----- importance sampling ----- //

struct ImportanceSamplingResult {
  std::vector<Vec> sequence;    // one sequence resampled by weight
  std::vector<double> weights;  // self-normalized weights of the draws
  double ess = 0.0;             // 1 / sum(normalized weights^2)
  double log_z = 0.0;           // log mean weight, a log-Z estimate
  double finite_fraction = 0.0; // fraction of draws with nonzero weight
  int n_samples = 0;
};

// Draws n_samples sequences from the prior, weights them by exp(-beta H)
// (infinite cost gives weight zero), self-normalizes, and resamples one
// sequence. Throws InfeasibleProposalError when every weight vanishes.
ImportanceSamplingResult importance_sample_control(const TrajectoryHamiltonian& ham,
                                                   const SequencePrior& prior, double beta,
                                                   int n_samples, Rng& rng);

// ----- Stein variational sampling ----- //

struct SvgdConfig {
  int n_particles = 32;
  int n_iterations = 200;
  double step_size = 1e-2;
  // <= 0 selects the median heuristic, recomputed every iteration:
  // h = median pairwise squared distance / (2 ln(n_particles + 1)).
  double kernel_bandwidth = 0.0;
  double beta = 1.0;
  // beta = inf limit: independent gradient descent on H per particle, best
  // particle returned (the argmin-MPC baseline).
  bool argmin_mode = false;
  // Run updates in prior-whitened coordinates w = L^-1 (u - mean). Exact
  // reparameterization of the same target; essential on badly conditioned
  // input spaces.
  bool whiten = false;
  // Overshoot rule: if the cost of the particle mean rises by more than this
  // relative tolerance, halve the step and retry (at most 10 times per
  // iteration, then error). The reduced step persists.
  double overshoot_tolerance = 0.02;
  std::ostream* trace = nullptr;  // optional JSONL particle trace
};

struct SvgdResult {
  std::vector<Vec> sequence;                // the returned input sequence
  std::vector<std::vector<Vec>> particles;  // final particle set
  std::vector<double> costs;                // H of each final particle
  int halvings = 0;
  double final_step = 0.0;
};

// Samples from the Gibbs trajectory posterior prior(u) exp(-beta H(u)) by
// Stein variational gradient descent; returns a uniform draw from the final
// particles (or the best particle in argmin mode).
SvgdResult svgd_sample_control(const TrajectoryHamiltonian& ham, const SequencePrior& prior,
                               const SvgdConfig& config, Rng& rng);

// ----- receding horizon wrapper ----- //

using SequenceSolver =
    std::function<std::vector<Vec>(int t0, const Vec& x0, Rng& rng)>;

// Wraps a trajectory sampler as a per-step controller: re-solves at steps
// congruent to 0 mod replan_every from the current estimate, executes the
// stored sequence in between; the first input of each solve is applied.
PolicyFactory receding_horizon_policy(SequenceSolver solver, int replan_every);

}  // namespace brdp
