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
#include <stdexcept>
#include <utility>
#include <vector>

#include "brdp/math_util.hpp"
#include "brdp/rng.hpp"

namespace brdp {

// The exponential mechanism U^beta(x){u} = prior{u} exp(-beta H(x,u)) / Z(x),
// Z(x) = E_prior[exp(-beta H(x,U))], in three explicitly chosen backends:
// exact enumeration over finite input sets, closed form for Gaussian priors
// with input-quadratic Hamiltonians, and self-normalized Monte Carlo.
// All internal arithmetic is done in the log domain.

class DivergingMechanismError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class UnreliableEstimateError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FreeEnergyReport {
  Vec state;
  double z = 0.0;            // partition function
  double log_z = 0.0;
  double free_energy = 0.0;  // -(1/beta) log Z
  double expected_h = 0.0;   // E[H(x,U)] under the mechanism
  double kl = 0.0;           // D[U^beta(x) || prior]
  double estimate_tolerance = 0.0;  // 0 for exact backends
};

using Hamiltonian = std::function<double(const Vec& x, const Vec& u)>;

// ----- exact enumeration backend ----- //

class FiniteGibbs {
 public:
  // prior_probs must be a probability vector over `inputs`.
  FiniteGibbs(std::vector<Vec> inputs, Vec prior_probs, Hamiltonian h, double beta);

  int n_inputs() const { return static_cast<int>(inputs_.size()); }
  const std::vector<Vec>& inputs() const { return inputs_; }
  double beta() const { return beta_; }

  // Densities of every input at state x (sums to 1).
  Vec densities(const Vec& x) const;
  double density(const Vec& x, int input_index) const;
  double log_density(const Vec& x, int input_index) const;

  double log_partition(const Vec& x) const;
  double partition(const Vec& x) const;

  FreeEnergyReport free_energy(const Vec& x) const;
  double kl_to_prior(const Vec& x) const;

  int sample_index(const Vec& x, Rng& rng) const;

  // Returns (F(x), E_alt[H] + KL(alt||prior)/beta) for an alternative pmf.
  std::pair<double, double> variational_check(const Vec& x, const Vec& alt_probs) const;

 private:
  std::vector<double> log_weights(const Vec& x) const;  // log prior - beta H

  std::vector<Vec> inputs_;
  Vec prior_probs_;
  Vec prior_log_probs_;
  Hamiltonian h_;
  double beta_;
};

// ----- Gaussian/quadratic closed-form backend ----- //

// H(x,u) = 1/2 uᵀ M u + m(x)ᵀ u + c(x) with M constant and symmetric PSD.
struct QuadraticInputHamiltonian {
  Mat curvature;  // M
  std::function<std::pair<Vec, double>(const Vec& x)> linear_term;  // x -> (m(x), c(x))

  double value(const Vec& x, const Vec& u) const {
    auto [m, c] = linear_term(x);
    return 0.5 * u.dot(curvature * u) + m.dot(u) + c;
  }
};

class GaussianQuadraticGibbs {
 public:
  GaussianQuadraticGibbs(GaussianDist prior, QuadraticInputHamiltonian h, double beta);

  double beta() const { return beta_; }
  const GaussianDist& prior() const { return prior_; }
  const QuadraticInputHamiltonian& hamiltonian() const { return h_; }

  // The mechanism at x is exactly Gaussian.
  GaussianDist posterior(const Vec& x) const;

  double log_partition(const Vec& x) const;
  double partition(const Vec& x) const;
  double density(const Vec& x, const Vec& u) const;
  double log_density(const Vec& x, const Vec& u) const;

  FreeEnergyReport free_energy(const Vec& x) const;
  double kl_to_prior(const Vec& x) const;

  // E_dist[H(x,U)] in closed form for a Gaussian `dist`.
  double expected_h(const Vec& x, const GaussianDist& dist) const;

  std::pair<double, double> variational_check(const Vec& x,
                                              const GaussianDist& alternative) const;

 private:
  GaussianDist prior_;
  QuadraticInputHamiltonian h_;
  double beta_;
  Mat prior_precision_;
  double prior_log_det_cov_;
};

// ----- Monte Carlo backend ----- //

class MonteCarloGibbs {
 public:
  struct ZEstimate {
    double log_z = 0.0;
    double rel_std_error = 0.0;  // relative standard error of Z-hat
    double ess = 0.0;            // effective sample size of the weights
    int n_samples = 0;
  };

  // The prior is both the mechanism's reference measure and the proposal.
  MonteCarloGibbs(std::function<Vec(Rng&)> prior_sampler, Hamiltonian h, double beta,
                  int n_samples = 4096);

  double beta() const { return beta_; }
  int n_samples() const { return n_samples_; }

  ZEstimate log_partition(const Vec& x, Rng& rng) const;
  FreeEnergyReport free_energy(const Vec& x, Rng& rng) const;

  // Importance-resampled draw from the mechanism.
  Vec sample(const Vec& x, Rng& rng) const;

 private:
  struct Weighted {
    std::vector<Vec> draws;
    std::vector<double> log_w;       // -beta H
    std::vector<double> norm_w;      // self-normalized
    double log_sum = 0.0;
  };
  Weighted weighted_draws(const Vec& x, Rng& rng) const;

  std::function<Vec(Rng&)> prior_sampler_;
  Hamiltonian h_;
  double beta_;
  int n_samples_;
};

}  // namespace brdp
