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

#include "brdp/dp_cert.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "brdp/parallel.hpp"

namespace brdp {

namespace {

constexpr double kZ95 = 1.959963984540054;
// Per-sample exponents above this mark the bound as overflowed.
const double kLogOverflow = std::log(1e300);

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

double rho_quadratic(const Vec& x, const Vec& x_hat) {
  if (x.size() != x_hat.size()) {
    throw std::invalid_argument("rho_quadratic: dimension mismatch");
  }
  const Mat gram_diff = x * x.transpose() - x_hat * x_hat.transpose();
  return 0.5 * gram_diff.norm() + (x - x_hat).norm();
}

double quadratic_state_lipschitz(const Mat& w, const Vec& h) {
  return std::max(w.norm(), h.norm());
}

double sampled_lipschitz(const std::function<double(const Vec&)>& f, const Vec& x0,
                         double region_radius, const StateMetric& metric,
                         int n_proposals, Rng& rng) {
  if (region_radius <= 0.0) {
    throw std::invalid_argument("sampled_lipschitz: region_radius must be positive");
  }
  // Proposals at a radius-independent scale, filtered into the metric ball:
  // on a fixed seed, larger radius accepts a superset, larger n a longer
  // prefix, so the max is nondecreasing in both.
  const double scale = 1.0 + x0.norm();
  const int n = static_cast<int>(x0.size());
  double best = 0.0;
  const double f0 = f(x0);
  (void)f0;
  for (int i = 0; i < n_proposals; ++i) {
    const Vec a = x0 + scale * rng.gaussian_vector(n);
    const Vec b = x0 + scale * rng.gaussian_vector(n);
    if (metric(x0, a) > region_radius || metric(x0, b) > region_radius) continue;
    const double d = metric(a, b);
    if (d <= 1e-15) continue;
    best = std::max(best, std::abs(f(a) - f(b)) / d);
  }
  return best;
}

double DpCertificate::budget(const std::vector<Vec>& states,
                             const std::vector<Vec>& estimates) const {
  if (states.size() < levels.size() || estimates.size() < levels.size()) {
    throw std::invalid_argument("DpCertificate::budget: trajectory shorter than levels");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < levels.size(); ++t) {
    total += 2.0 * beta * levels[t] * metric(states[t], estimates[t]);
  }
  return total;
}

GammaEstimate estimate_gamma(const ControlSystem& system, const PolicyFactory& make_policy,
                             const Estimator& estimator, const StateMetric& metric,
                             const LevelFn& level_of, double beta,
                             const std::vector<double>& levels, int n_samples,
                             std::uint64_t seed, int n_threads) {
  if (n_samples < 30) {
    throw std::invalid_argument("estimate_gamma: need at least 30 samples for the CI");
  }
  if (static_cast<int>(levels.size()) != system.horizon) {
    throw std::invalid_argument("estimate_gamma: one level per step required");
  }
  const int tf = system.horizon;
  std::vector<double> traj_gamma(n_samples);
  std::vector<std::vector<double>> step_terms(n_samples);
  parallel_for(n_samples, n_threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(seed, static_cast<std::uint64_t>(i));
    auto policy = make_policy();
    const Trajectory traj =
        rollout(system, *policy, estimator, rngs, FeedbackMode::true_state);
    double total = 0.0;
    step_terms[i].resize(tf);
    for (int t = 0; t < tf; ++t) {
      const bool in_set = level_of(t, traj.inputs[t]) < levels[t];
      const double term =
          in_set ? std::exp(-2.0 * beta * levels[t] * metric(traj.states[t], traj.estimates[t]))
                 : 0.0;
      step_terms[i][t] = 1.0 - term;
      total += 1.0 - term;
    }
    traj_gamma[i] = total;
  });
  GammaEstimate est;
  est.gamma_raw = mean_of(traj_gamma);
  est.gamma = std::clamp(est.gamma_raw, 0.0, 1.0);
  est.ci95 = kZ95 * sample_std(traj_gamma, est.gamma_raw) /
             std::sqrt(static_cast<double>(n_samples));
  est.per_step.assign(tf, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    for (int t = 0; t < tf; ++t) est.per_step[t] += step_terms[i][t];
  }
  for (int t = 0; t < tf; ++t) est.per_step[t] /= n_samples;
  return est;
}

DpAuditReport empirical_dp_audit(const ControlSystem& system, const PolicyFactory& make_policy,
                                 const Estimator& estimator, const StepLogDensity& log_density,
                                 const StateMetric& metric, const LevelFn& level_of,
                                 double beta, const std::vector<double>& levels,
                                 int t_begin, int t_end, int n_samples, std::uint64_t seed,
                                 int n_threads) {
  if (t_begin < 0 || t_end > system.horizon || t_begin >= t_end) {
    throw std::invalid_argument("empirical_dp_audit: bad step range");
  }
  struct Row {
    bool in_level = false;
    double slack = 0.0;  // log ratio - budget
  };
  std::vector<Row> rows(n_samples);
  parallel_for(n_samples, n_threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(seed, static_cast<std::uint64_t>(i));
    auto policy = make_policy();
    const Trajectory traj =
        rollout(system, *policy, estimator, rngs, FeedbackMode::true_state);
    bool in_level = true;
    double log_ratio = 0.0;
    double budget = 0.0;
    for (int t = t_begin; t < t_end; ++t) {
      in_level = in_level && level_of(t, traj.inputs[t]) < levels[t];
      log_ratio += log_density(t, traj.states[t], traj.inputs[t]) -
                   log_density(t, traj.estimates[t], traj.inputs[t]);
      budget += 2.0 * beta * levels[t] * metric(traj.states[t], traj.estimates[t]);
    }
    rows[i] = Row{in_level, log_ratio - budget};
  });

  DpAuditReport report;
  report.n_total = n_samples;
  constexpr double kSlackTol = 1e-9;
  int violations = 0;
  int event_failures = 0;
  for (const Row& r : rows) {
    if (!r.in_level) {
      ++event_failures;
      continue;
    }
    ++report.n_in_level;
    report.worst_slack = std::max(report.worst_slack, r.slack);
    if (r.slack > kSlackTol) {
      ++violations;
      ++event_failures;
    }
  }
  report.in_level_fraction = static_cast<double>(report.n_in_level) / n_samples;
  report.event_fraction = static_cast<double>(event_failures) / n_samples;
  if (report.n_in_level > 0) {
    const double p = static_cast<double>(violations) / report.n_in_level;
    report.violation_fraction = p;
    report.violation_ci95 =
        kZ95 * std::sqrt(std::max(p * (1.0 - p), 1.0 / report.n_in_level) /
                         report.n_in_level);
  }
  return report;
}

DpCertificate compose_budgets(const std::vector<DpCertificate>& certs) {
  if (certs.empty()) {
    throw std::invalid_argument("compose_budgets: empty certificate list");
  }
  DpCertificate out;
  out.beta = certs.front().beta;
  out.metric = certs.front().metric;
  out.level_quantile = certs.front().level_quantile;
  for (const DpCertificate& c : certs) {
    if (c.beta != out.beta) {
      throw std::invalid_argument("compose_budgets: mismatched beta");
    }
    out.levels.insert(out.levels.end(), c.levels.begin(), c.levels.end());
    out.gamma_raw += c.gamma_raw;
    out.gamma_ci95 += c.gamma_ci95;
  }
  out.gamma = std::clamp(out.gamma_raw, 0.0, 1.0);
  return out;
}

RobustnessReport robustness_bound(const ControlSystem& system, const PolicyFactory& make_policy,
                                  const Estimator& estimator, const DpCertificate& cert,
                                  const StepKl& kl_of, int n_bound_samples, int n_cost_trials,
                                  std::uint64_t seed, int n_threads) {
  RobustnessReport report;
  report.gamma = cert.gamma;
  report.n_bound_samples = n_bound_samples;
  report.n_cost_trials = n_cost_trials;

  // Bound term: offline rollouts, estimator only measures rho.
  std::vector<double> exponents(n_bound_samples);
  std::vector<double> kl_sums(n_bound_samples);
  parallel_for(n_bound_samples, n_threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(seed, static_cast<std::uint64_t>(i));
    auto policy = make_policy();
    const Trajectory traj =
        rollout(system, *policy, estimator, rngs, FeedbackMode::true_state);
    double kl = 0.0;
    for (int t = 0; t < static_cast<int>(cert.levels.size()); ++t) {
      kl += kl_of(t, traj.states[t]);
    }
    kl_sums[i] = kl;
    exponents[i] = cert.budget(traj.states, traj.estimates) + kl;
  });
  report.kl_term = mean_of(kl_sums);

  const double log_beta = std::log(cert.beta);
  double max_exponent = -kInf;
  for (int i = 0; i < n_bound_samples; ++i) {
    if (exponents[i] > kLogOverflow) {
      report.bound_finite = false;
      if (report.dominating_sample < 0 || exponents[i] > exponents[report.dominating_sample]) {
        report.dominating_sample = i;
      }
    }
    max_exponent = std::max(max_exponent, exponents[i]);
  }
  if (!report.bound_finite) {
    report.bound = kInf;
    report.bound_ci95 = kInf;
  } else {
    // Log-domain mean with one final exponential.
    std::vector<double> shifted(n_bound_samples);
    double acc = 0.0;
    for (int i = 0; i < n_bound_samples; ++i) acc += std::exp(exponents[i] - max_exponent);
    const double log_bound =
        max_exponent + std::log(acc / n_bound_samples) - log_beta;
    report.bound = std::exp(log_bound);
    if (std::isinf(report.bound)) {
      report.bound_finite = false;
      report.bound_ci95 = kInf;
    } else {
      for (int i = 0; i < n_bound_samples; ++i) {
        shifted[i] = std::exp(exponents[i] - log_beta - log_bound);  // y_i / mean
      }
      const double rel_sd = sample_std(shifted, 1.0);
      report.bound_ci95 =
          kZ95 * rel_sd * report.bound / std::sqrt(static_cast<double>(n_bound_samples));
    }
  }

  // Paired delta-J measurement: identical seeds, feedback source differs.
  const std::uint64_t cost_seed = Rng::stream(seed, 0x6a09e667f3bcc908ull).next_u64();
  const std::vector<double> off = monte_carlo_trial_costs(
      system, make_policy, estimator, n_cost_trials, cost_seed, n_threads,
      FeedbackMode::true_state);
  const std::vector<double> on = monte_carlo_trial_costs(
      system, make_policy, estimator, n_cost_trials, cost_seed, n_threads,
      FeedbackMode::estimate);
  report.j_off = summarize_costs(off);
  report.j_on = summarize_costs(on);
  std::vector<double> diff;
  diff.reserve(n_cost_trials);
  for (int i = 0; i < n_cost_trials; ++i) {
    if (std::isfinite(off[i]) && std::isfinite(on[i])) diff.push_back(on[i] - off[i]);
  }
  if (!diff.empty()) {
    report.delta_j = mean_of(diff);
    report.delta_j_ci95 = kZ95 * sample_std(diff, report.delta_j) /
                          std::sqrt(static_cast<double>(diff.size()));
  } else {
    report.delta_j = std::nan("");
    report.delta_j_ci95 = std::nan("");
  }
  return report;
}

BetaGridPoint optimize_beta(const std::vector<BetaGridPoint>& grid) {
  if (grid.empty()) throw std::invalid_argument("optimize_beta: empty grid");
  std::vector<BetaGridPoint> sorted = grid;
  std::sort(sorted.begin(), sorted.end(),
            [](const BetaGridPoint& a, const BetaGridPoint& b) { return a.beta < b.beta; });
  const BetaGridPoint* best = nullptr;
  for (const BetaGridPoint& p : sorted) {
    if (std::isinf(p.value) || std::isnan(p.value)) continue;
    if (best == nullptr || p.value < best->value) best = &p;  // strict: ties keep smaller beta
  }
  if (best == nullptr) {
    throw GridExhaustedError(
        "optimize_beta: every bound on the grid is infinite; extend the grid toward 0");
  }
  return *best;
}

// ----- BR-LQG instantiations ----- //

LevelFn br_lqg_level_fn(const LqgProblem& problem, const BrLqgPolicy& policy) {
  std::vector<double> w_norms(problem.horizon);
  for (int t = 0; t < problem.horizon; ++t) {
    const Mat w = problem.Q + problem.A.transpose() * policy.P[t + 1] * problem.A;
    w_norms[t] = w.norm();
  }
  const Mat& A = problem.A;
  const Mat& B = problem.B;
  return [w_norms, &policy, A, B](int t, const Vec& u) {
    const Vec h = A.transpose() * (policy.P[t + 1] * (B * u) + policy.b[t + 1]);
    return std::max(w_norms[t], h.norm());
  };
}

StepLogDensity br_lqg_log_density(const BrLqgPolicy& policy) {
  return [&policy](int t, const Vec& x, const Vec& u) {
    return policy.log_density(t, x, u);
  };
}

StepKl br_lqg_step_kl(const BrLqgPolicy& policy, const LqgProblem& problem) {
  return [&policy, &problem](int t, const Vec& x) {
    return stepwise_kl(policy, problem, x, t);
  };
}

std::vector<double> choose_levels(const ControlSystem& system, const PolicyFactory& make_policy,
                                  const Estimator& estimator, const LevelFn& level_of,
                                  double quantile, int n_samples, std::uint64_t seed,
                                  int n_threads) {
  if (quantile <= 0.0 || quantile > 1.0) {
    throw std::invalid_argument("choose_levels: quantile must lie in (0, 1]");
  }
  const int tf = system.horizon;
  std::vector<std::vector<double>> required(tf, std::vector<double>(n_samples));
  parallel_for(n_samples, n_threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(seed, static_cast<std::uint64_t>(i));
    auto policy = make_policy();
    const Trajectory traj =
        rollout(system, *policy, estimator, rngs, FeedbackMode::true_state);
    for (int t = 0; t < tf; ++t) required[t][i] = level_of(t, traj.inputs[t]);
  });
  std::vector<double> levels(tf);
  for (int t = 0; t < tf; ++t) {
    std::sort(required[t].begin(), required[t].end());
    const int idx = std::min(n_samples - 1,
                             static_cast<int>(std::ceil(quantile * n_samples)) - 1);
    // Nudge above the quantile sample so that it itself stays inside U(l).
    levels[t] = required[t][std::max(idx, 0)] * (1.0 + 1e-12) + 1e-300;
  }
  return levels;
}

DpCertificate build_br_lqg_certificate(const ControlSystem& system, const LqgProblem& problem,
                                       const BrLqgPolicy& policy, const Estimator& estimator,
                                       double level_quantile, int n_level_samples,
                                       int n_gamma_samples, std::uint64_t seed,
                                       int n_threads) {
  const LevelFn level_of = br_lqg_level_fn(problem, policy);
  const PolicyFactory factory = br_lqg_policy_factory(policy);
  const std::uint64_t level_seed = Rng::stream(seed, 0xbb67ae8584caa73bull).next_u64();
  DpCertificate cert;
  cert.beta = policy.beta;
  cert.metric = rho_quadratic;
  cert.level_quantile = level_quantile;
  cert.levels = choose_levels(system, factory, estimator, level_of, level_quantile,
                              n_level_samples, level_seed, n_threads);
  const GammaEstimate gamma =
      estimate_gamma(system, factory, estimator, cert.metric, level_of, policy.beta,
                     cert.levels, n_gamma_samples, seed, n_threads);
  cert.gamma = gamma.gamma;
  cert.gamma_raw = gamma.gamma_raw;
  cert.gamma_ci95 = gamma.ci95;
  return cert;
}

nlohmann::json certificate_to_json(const DpCertificate& cert) {
  nlohmann::json j;
  j["beta"] = cert.beta;
  j["levels"] = cert.levels;
  j["gamma"] = cert.gamma;
  j["gamma_raw"] = cert.gamma_raw;
  j["gamma_ci95"] = cert.gamma_ci95;
  j["level_quantile"] = cert.level_quantile;
  j["vacuous"] = cert.vacuous();
  return j;
}

nlohmann::json report_to_json(const RobustnessReport& report) {
  nlohmann::json j;
  auto summary = [](const CostSummary& s) {
    nlohmann::json out;
    out["mean"] = s.mean;
    out["std"] = s.stddev;
    out["n_trials"] = s.n_trials;
    out["failure_fraction"] = s.failure_fraction;
    out["mean_defined"] = s.mean_defined;
    return out;
  };
  j["j_off"] = summary(report.j_off);
  j["j_on"] = summary(report.j_on);
  j["delta_j"] = report.delta_j;
  j["delta_j_ci95"] = report.delta_j_ci95;
  j["bound"] = report.bound_finite ? nlohmann::json(report.bound) : nlohmann::json("inf");
  j["bound_ci95"] = report.bound_finite ? nlohmann::json(report.bound_ci95)
                                        : nlohmann::json("inf");
  j["bound_finite"] = report.bound_finite;
  j["dominating_sample"] = report.dominating_sample;
  j["gamma"] = report.gamma;
  j["kl_term"] = report.kl_term;
  j["n_bound_samples"] = report.n_bound_samples;
  j["n_cost_trials"] = report.n_cost_trials;
  return j;
}

}  // namespace brdp
