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
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "brdp/core.hpp"
#include "brdp/lqg_br.hpp"
#include "brdp/math_util.hpp"

namespace brdp {

// Differential-privacy machinery for stochastic controllers: the state
// metric, Lipschitz action sets, the privacy-failure probability gamma, an
// empirical audit of the DP log-ratio inequality, budget composition, and
// the robustness bound on the offline/online cost gap.

using StateMetric = std::function<double(const Vec& x, const Vec& x_hat)>;

// The required Lipschitz level of x -> H_t(x, u); u is in the action set
// U_t(l) exactly when this value is below l.
using LevelFn = std::function<double(int t, const Vec& u)>;

// log density of the controller's step-t output at u given state x.
using StepLogDensity = std::function<double(int t, const Vec& x, const Vec& u)>;

// D[policy at (t, x) || prior_t].
using StepKl = std::function<double(int t, const Vec& x)>;

// rho(x, x_hat) = 1/2 ||x xT - xh xhT||_F + ||x - xh||_2. Under this metric
// quadratic functions of the state are globally Lipschitz.
double rho_quadratic(const Vec& x, const Vec& x_hat);

// Exact Lipschitz level of x -> 1/2 xT W x + hT x (+const) under
// rho_quadratic: max(||W||_F, ||h||_2).
double quadratic_state_lipschitz(const Mat& w, const Vec& h);

// Sampled lower estimate of the rho-Lipschitz constant of f on the
// metric ball of the given radius around x0. Proposals come from a
// radius-independent stream and are filtered into the ball, so on a fixed
// seed the estimate is nondecreasing in both n_proposals and radius.
double sampled_lipschitz(const std::function<double(const Vec&)>& f, const Vec& x0,
                         double region_radius, const StateMetric& metric,
                         int n_proposals, Rng& rng);

struct DpCertificate {
  double beta = 0.0;
  std::vector<double> levels;  // per-step Lipschitz levels l_t
  double gamma = 0.0;          // clipped to [0, 1]
  double gamma_raw = 0.0;      // the Prop-style sum before clipping
  double gamma_ci95 = 0.0;
  double level_quantile = 0.0; // how the levels were selected
  StateMetric metric;

  int steps() const { return static_cast<int>(levels.size()); }
  bool vacuous() const { return gamma >= 1.0; }

  // rho_beta over trajectories: sum over t of 2 beta l_t rho(x_t, xh_t).
  double budget(const std::vector<Vec>& states, const std::vector<Vec>& estimates) const;
};

struct GammaEstimate {
  double gamma = 0.0;      // clipped
  double gamma_raw = 0.0;
  double ci95 = 0.0;
  std::vector<double> per_step;
};

// Monte Carlo estimate of gamma = sum_t (1 - E[1_{U_t(l_t)}(U_t)
// exp(-2 beta l_t rho(X_t, Xh_t))]) along offline closed-loop rollouts (the
// controller sees the true state; the estimator is sampled only to measure
// rho). Refuses n_samples < 30.
GammaEstimate estimate_gamma(const ControlSystem& system, const PolicyFactory& make_policy,
                             const Estimator& estimator, const StateMetric& metric,
                             const LevelFn& level_of, double beta,
                             const std::vector<double>& levels, int n_samples,
                             std::uint64_t seed, int n_threads = 1);

struct DpAuditReport {
  // Fraction of in-level triples whose log-density ratio exceeds the budget.
  double violation_fraction = 0.0;
  double violation_ci95 = 0.0;
  double worst_slack = -kInf;  // max (log ratio - budget) over in-level triples
  int n_in_level = 0;
  int n_total = 0;
  double in_level_fraction = 0.0;
  // Fraction violating the full event (out-of-level or ratio above budget).
  double event_fraction = 0.0;
};

// Empirical check of the DP inequality over the step range [t_begin, t_end):
// per sampled offline trajectory, the mechanism (U_t(x_t))_{t in range} is
// audited with budget sum_t 2 beta l_t rho(x_t, xh_t). A range of length one
// audits a single step; longer ranges audit composed mechanisms.
DpAuditReport empirical_dp_audit(const ControlSystem& system, const PolicyFactory& make_policy,
                                 const Estimator& estimator, const StepLogDensity& log_density,
                                 const StateMetric& metric, const LevelFn& level_of,
                                 double beta, const std::vector<double>& levels,
                                 int t_begin, int t_end, int n_samples, std::uint64_t seed,
                                 int n_threads = 1);

// Pointwise-additive budget and summed gamma (clipped to 1).
DpCertificate compose_budgets(const std::vector<DpCertificate>& certs);

struct RobustnessReport {
  CostSummary j_off;
  CostSummary j_on;
  double delta_j = 0.0;
  double delta_j_ci95 = 0.0;
  int n_cost_trials = 0;
  double bound = 0.0;        // (1/beta) E[exp(rho_beta + KL)], +inf on overflow
  double bound_ci95 = 0.0;
  bool bound_finite = true;
  int dominating_sample = -1;  // first sample whose exponent overflowed
  double gamma = 0.0;
  double kl_term = 0.0;      // E[sum_t KL_t], the expected trajectory KL
  int n_bound_samples = 0;
};

// Evaluates the robustness bound by Monte Carlo over offline rollouts (the
// estimator is used only to measure rho, never for feedback) and measures
// delta J directly via paired online/offline cost trials on the same seed.
RobustnessReport robustness_bound(const ControlSystem& system, const PolicyFactory& make_policy,
                                  const Estimator& estimator, const DpCertificate& cert,
                                  const StepKl& kl_of, int n_bound_samples, int n_cost_trials,
                                  std::uint64_t seed, int n_threads = 1);

struct BetaGridPoint {
  double beta = 0.0;
  double value = 0.0;
};

class GridExhaustedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid argmin with ties broken toward smaller beta; throws GridExhaustedError
// (suggesting extension toward 0) when every value is infinite.
BetaGridPoint optimize_beta(const std::vector<BetaGridPoint>& grid);

// ----- BR-LQG instantiations ----- //

// H_t(x,u) = 1/2 xT W_t x + h_t(u)T x + const with W_t = Q + AT P_{t+1} A and
// h_t(u) = AT (P_{t+1} B u + b_{t+1}); the level of u is the exact
// quadratic_state_lipschitz of that form.
LevelFn br_lqg_level_fn(const LqgProblem& problem, const BrLqgPolicy& policy);

StepLogDensity br_lqg_log_density(const BrLqgPolicy& policy);
StepKl br_lqg_step_kl(const BrLqgPolicy& policy, const LqgProblem& problem);

// Per-step quantile of the required levels observed along offline rollouts.
std::vector<double> choose_levels(const ControlSystem& system, const PolicyFactory& make_policy,
                                  const Estimator& estimator, const LevelFn& level_of,
                                  double quantile, int n_samples, std::uint64_t seed,
                                  int n_threads = 1);

// Level selection followed by gamma estimation.
DpCertificate build_br_lqg_certificate(const ControlSystem& system, const LqgProblem& problem,
                                       const BrLqgPolicy& policy, const Estimator& estimator,
                                       double level_quantile, int n_level_samples,
                                       int n_gamma_samples, std::uint64_t seed,
                                       int n_threads = 1);

nlohmann::json certificate_to_json(const DpCertificate& cert);
nlohmann::json report_to_json(const RobustnessReport& report);

}  // namespace brdp
