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

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "brdp/core.hpp"
#include "brdp/math_util.hpp"

namespace brdp {

// Finite-horizon linear-quadratic problem
//   x_{t+1} = A x_t + B u_t + eps_t,   eps_t ~ N(0, process_noise_cov[t]),
//   c_t(x,u) = 1/2 (xᵀQx + uᵀRu),      c_tf(x) = 1/2 xᵀQ_f x,
// with a per-step Gaussian prior over inputs. The 1/2 cost convention is the
// one consistent with the value recursion below.
struct LqgProblem {
  Mat A, B, Q, R, Qf;
  std::vector<Mat> process_noise_cov;  // empty means zero noise
  int horizon = 0;
  std::vector<GaussianDist> prior;  // one per step t in [0, horizon)

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }

  // Checks dimensions and definiteness (min eigenvalue >= -1e-10, then
  // symmetrized). Throws std::invalid_argument on violation.
  void validate();
};

class IllConditionedProblemError : public std::runtime_error {
 public:
  IllConditionedProblemError(const std::string& what, double condition_number)
      : std::runtime_error(what + " (condition number " +
                           std::to_string(condition_number) + ")"),
        condition_number(condition_number) {}
  double condition_number;
};

// Bounded-rational LQG policy: per step u_t = K_t x_t + eta_t with
// eta_t ~ N(eta_mean_t, eta_cov_t), plus the quadratic value recursion
// V_t(x) = 1/2 xᵀP_t x + b_tᵀx + d_t.
struct BrLqgPolicy {
  double beta = 0.0;
  std::vector<Mat> K;          // horizon entries
  std::vector<Vec> eta_mean;   // horizon entries
  std::vector<Mat> eta_cov;    // horizon entries
  std::vector<Mat> eta_cov_chol;  // lower Cholesky factors of eta_cov
  std::vector<double> eta_cov_log_det;
  std::vector<Mat> P;          // horizon + 1 entries, P[horizon] = Qf
  std::vector<Vec> b;          // horizon + 1 entries
  std::vector<double> d;       // horizon + 1 entries

  int horizon() const { return static_cast<int>(K.size()); }

  Vec mean_input(int t, const Vec& x) const { return K[t] * x + eta_mean[t]; }
  Vec sample(int t, const Vec& x, Rng& rng) const;
  double log_density(int t, const Vec& x, const Vec& u) const;

  // V_0(x0); for zero process noise this is the expected total cost of the
  // policy from a deterministic start.
  double value(const Vec& x0) const;
};

// Backward recursion for the Gibbs-optimal affine-Gaussian policy at finite
// beta. Per-step precision: eta_cov^{-1} = beta (BᵀP_{t+1}B + R) + prior_cov^{-1}.
BrLqgPolicy solve_br_lqg(const LqgProblem& problem, double beta);

// Standard finite-horizon discrete Riccati recursion; the beta -> inf
// reference and the LQR baseline controller.
std::vector<Mat> lqr_reference(const LqgProblem& problem);

// Closed-form KL between the policy's step-t input law at state x and the
// prior at step t.
double stepwise_kl(const BrLqgPolicy& policy, const LqgProblem& problem, const Vec& x,
                   int t);

// Prior construction for the quadrotor experiments: the initial distribution
// is pushed through the LQR closed loop and the marginal input law at each
// step is taken as the prior, with a small ridge to keep it full rank.
std::vector<GaussianDist> project_prior_through_lqr(const LqgProblem& problem_sans_prior,
                                                    const Vec& x0_mean, const Mat& x0_cov,
                                                    double ridge = 1e-8);

// Policy adapters for the rollout machinery.
PolicyFactory br_lqg_policy_factory(const BrLqgPolicy& policy);
PolicyFactory lqr_policy_factory(const std::vector<Mat>& gains);
PolicyFactory prior_policy_factory(const std::vector<GaussianDist>& prior);

// JSON round trip: per-step arrays `K`, `eta_mean`, `eta_cov`, `P`, `b`, `d`
// plus `beta`; matrices row-major.
nlohmann::json policy_to_json(const BrLqgPolicy& policy);
BrLqgPolicy policy_from_json(const nlohmann::json& j);

}  // namespace brdp
