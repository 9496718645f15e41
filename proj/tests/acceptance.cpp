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

// End-to-end acceptance suite. Each check prints one PASS/FAIL line; the
// binary exits nonzero if any check fails. Run `brdp_acceptance --list` for
// the checks and `--only N` to run a single one.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "brdp/bench.hpp"
#include "brdp/dp_cert.hpp"
#include "brdp/gibbs.hpp"
#include "brdp/lqg_br.hpp"
#include "brdp/samplers.hpp"
#include "brdp/systems.hpp"

namespace {

using namespace brdp;

struct Outcome {
  bool pass = false;
  std::string detail;
};

LqgProblem quadrotor_problem() {
  const QuadrotorParams quad;
  const auto [A, B] = linearize_quadrotor(quad);
  LqgProblem p;
  p.A = A;
  p.B = B;
  p.Q = Mat::Identity(6, 6);
  p.R = 0.1 * Mat::Identity(2, 2);
  p.Qf = Mat::Identity(6, 6);
  p.horizon = quad.horizon;
  p.prior = project_prior_through_lqr(p, quadrotor_x0_mean(),
                                      Mat(quadrotor_x0_variance().asDiagonal()));
  p.validate();
  return p;
}

ControlSystem quadrotor_system(const LqgProblem& p) {
  return linear_quadratic_system(p.A, p.B, p.Q, p.R, p.Qf, p.horizon,
                                 quadrotor_initial_distribution());
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

// ----- 1: LQR limit ----- //
Outcome check_lqr_limit() {
  const auto p = quadrotor_problem();
  const auto oracle = lqr_reference(p);
  const auto pol = solve_br_lqg(p, 1e8);
  double num = 0.0, den = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    num += (pol.K[t] - oracle[t]).squaredNorm();
    den += oracle[t].squaredNorm();
  }
  const double rel = std::sqrt(num / den);
  return {rel < 1e-4, "relative gain error " + fmt(rel) + " (tolerance 1e-4)"};
}

// ----- 2: prior limit ----- //
Outcome check_prior_limit() {
  const auto p = quadrotor_problem();
  const auto pol = solve_br_lqg(p, 1e-8);
  double worst = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    worst = std::max(worst, pol.K[t].norm());
    worst = std::max(worst, (pol.eta_mean[t] - p.prior[t].mean()).norm());
    worst = std::max(worst, (pol.eta_cov[t] - p.prior[t].cov()).norm());
  }
  return {worst < 1e-6, "worst parameter deviation from prior " + fmt(worst)};
}

// ----- 3: Gibbs enumeration oracle ----- //
Outcome check_gibbs_enumeration() {
  Rng master(20260516);
  double worst_density_err = 0.0;
  double worst_freq_z = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const int n = 2 + static_cast<int>(master.below(15));
    std::vector<Vec> inputs;
    Vec prior(n);
    std::vector<double> hvals(n);
    for (int i = 0; i < n; ++i) {
      inputs.push_back(Vec::Constant(1, static_cast<double>(i)));
      prior[i] = 0.2 + master.uniform();
      hvals[i] = 3.0 * master.uniform();
    }
    prior /= prior.sum();
    const double beta = std::exp(1.5 * (master.uniform() * 2.0 - 1.0));
    const FiniteGibbs g(
        inputs, prior,
        [&hvals](const Vec&, const Vec& u) { return hvals[static_cast<int>(u[0])]; }, beta);

    // brute-force enumeration in plain arithmetic
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += prior[i] * std::exp(-beta * hvals[i]);
    const Vec d = g.densities(Vec::Zero(1));
    for (int i = 0; i < n; ++i) {
      const double expect = prior[i] * std::exp(-beta * hvals[i]) / z;
      worst_density_err = std::max(worst_density_err, std::abs(d[i] - expect));
    }

    // sampling frequencies at 1e4 draws
    const int draws = 10000;
    std::vector<int> counts(n, 0);
    for (int k = 0; k < draws; ++k) ++counts[g.sample_index(Vec::Zero(1), master)];
    for (int i = 0; i < n; ++i) {
      const double se = std::sqrt(std::max(d[i] * (1.0 - d[i]), 1e-12) / draws);
      const double zstat =
          std::abs(counts[i] / static_cast<double>(draws) - d[i]) / se;
      worst_freq_z = std::max(worst_freq_z, zstat);
    }
  }
  const bool pass = worst_density_err <= 1e-12 && worst_freq_z <= 3.0;
  return {pass, "max density error " + fmt(worst_density_err) + ", max frequency z " +
                    fmt(worst_freq_z)};
}

// ----- 4: free-energy identities ----- //
Outcome check_free_energy() {
  Rng rng(41);
  double worst_logz = 0.0, worst_identity = 0.0, worst_gap = kInf;
  for (int k = 0; k < 20; ++k) {
    Mat L = Mat::Zero(2, 2);
    L(0, 0) = 0.5 + rng.uniform();
    L(1, 1) = 0.5 + rng.uniform();
    L(1, 0) = 0.5 * rng.gaussian();
    const Mat M = L * L.transpose();
    const Vec m = rng.gaussian_vector(2);
    const double c = rng.uniform();
    const double beta = std::exp(rng.gaussian());
    Mat Lp = Mat::Zero(2, 2);
    Lp(0, 0) = 0.4 + rng.uniform();
    Lp(1, 1) = 0.4 + rng.uniform();
    const GaussianDist prior(rng.gaussian_vector(2), Lp * Lp.transpose());
    QuadraticInputHamiltonian qh;
    qh.curvature = M;
    qh.linear_term = [m, c](const Vec&) { return std::make_pair(m, c); };
    const GaussianQuadraticGibbs g(prior, qh, beta);
    const auto r = g.free_energy(Vec::Zero(1));
    worst_logz = std::max(worst_logz, std::abs(r.free_energy + r.log_z / beta) /
                                          std::max(1.0, std::abs(r.free_energy)));
    worst_identity =
        std::max(worst_identity, std::abs(r.free_energy - (r.expected_h + r.kl / beta)));
    // variational inequality over random alternatives
    for (int j = 0; j < 5; ++j) {
      Mat La = Mat::Zero(2, 2);
      La(0, 0) = 0.3 + rng.uniform();
      La(1, 1) = 0.3 + rng.uniform();
      const GaussianDist alt(rng.gaussian_vector(2), La * La.transpose());
      const auto [lhs, rhs] = g.variational_check(Vec::Zero(1), alt);
      worst_gap = std::min(worst_gap, rhs - lhs);
    }
  }
  const bool pass = worst_logz <= 1e-12 && worst_identity <= 1e-6 && worst_gap >= -1e-9;
  return {pass, "logZ identity " + fmt(worst_logz) + ", Lagrangian identity " +
                    fmt(worst_identity) + ", min variational slack " + fmt(worst_gap)};
}

// ----- 5: DP audit consistency ----- //
Outcome check_dp_audit() {
  const auto p = quadrotor_problem();
  const auto sys = quadrotor_system(p);
  const auto est = gaussian_estimator(0.4, quadrotor_noise_shape());
  std::ostringstream detail;
  bool pass = true;

  const auto contract = [&](double beta, std::uint64_t seed, const char* tag) {
    const auto pol = solve_br_lqg(p, beta);
    const auto cert = build_br_lqg_certificate(sys, p, pol, est, 0.99, 400, 400, seed, 1);
    const auto audit = empirical_dp_audit(
        sys, br_lqg_policy_factory(pol), est, br_lqg_log_density(pol), rho_quadratic,
        br_lqg_level_fn(p, pol), beta, cert.levels, 0, p.horizon, 10000, seed + 1, 1);
    const double budget = cert.gamma + cert.gamma_ci95 + audit.violation_ci95;
    const bool ok = audit.violation_fraction <= std::min(1.0, budget) + 1e-12;
    pass = pass && ok;
    detail << tag << ": violations " << fmt(audit.violation_fraction) << " <= gamma "
           << fmt(cert.gamma) << "+CI; ";
    return cert;
  };

  contract(1e-2, 71, "beta=1e-2");
  const auto cert_small = contract(1e-6, 73, "beta=1e-6");
  pass = pass && cert_small.gamma < 1.0;
  detail << "non-vacuous gamma(1e-6) " << fmt(cert_small.gamma) << "; ";

  // composed 2-step budget
  {
    const double beta = 1e-3;
    const auto pol = solve_br_lqg(p, beta);
    const auto factory = br_lqg_policy_factory(pol);
    const auto level_of = br_lqg_level_fn(p, pol);
    const auto levels = choose_levels(sys, factory, est, level_of, 0.99, 400, 75, 1);
    const auto g = estimate_gamma(sys, factory, est, rho_quadratic, level_of, beta, levels,
                                  400, 76, 1);
    std::vector<DpCertificate> singles;
    for (int t = 0; t < 2; ++t) {
      DpCertificate c;
      c.beta = beta;
      c.metric = rho_quadratic;
      c.levels = {levels[t]};
      c.gamma_raw = g.per_step[t];
      c.gamma = std::min(1.0, c.gamma_raw);
      c.gamma_ci95 = g.ci95;
      singles.push_back(c);
    }
    const auto composed = compose_budgets(singles);
    const auto audit =
        empirical_dp_audit(sys, factory, est, br_lqg_log_density(pol), rho_quadratic,
                           level_of, beta, levels, 0, 2, 10000, 77, 1);
    const double budget = composed.gamma + composed.gamma_ci95 + audit.violation_ci95;
    const bool ok = audit.violation_fraction <= std::min(1.0, budget) + 1e-12;
    pass = pass && ok;
    detail << "2-step composed: violations " << fmt(audit.violation_fraction) << " <= "
           << fmt(budget);
  }
  return {pass, detail.str()};
}

// ----- 6: Theorem-style bound validity across the sweep ----- //
Outcome check_bound_validity() {
  const auto p = quadrotor_problem();
  const auto sys = quadrotor_system(p);
  const auto betas = log_spaced(0.1, 1000.0, 20);
  const std::vector<double> sigmas{0.0, 0.2, 0.4};
  int certified_cells = 0, valid_cells = 0, total_cells = 0;
  for (double beta : betas) {
    const auto pol = solve_br_lqg(p, beta);
    const auto factory = br_lqg_policy_factory(pol);
    for (double sigma2 : sigmas) {
      ++total_cells;
      const auto est = gaussian_estimator(sigma2, quadrotor_noise_shape());
      const auto cert = build_br_lqg_certificate(sys, p, pol, est, 0.99, 400, 400, 501, 1);
      if (cert.gamma >= 0.5) continue;
      ++certified_cells;
      const auto report = robustness_bound(sys, factory, est, cert,
                                           br_lqg_step_kl(pol, p), 1000, 1000, 502, 1);
      // one-sided test at 95%: the data cannot reject delta J <= bound
      if (report.delta_j - report.delta_j_ci95 <= report.bound) ++valid_cells;
    }
  }
  const bool pass = certified_cells > 0 && valid_cells == certified_cells;
  return {pass, std::to_string(valid_cells) + "/" + std::to_string(certified_cells) +
                    " certified cells valid (of " + std::to_string(total_cells) +
                    " cells; gamma < 0.5 required for certification)"};
}

// ----- 7: linear-experiment cost trend ----- //
Outcome check_linear_trend() {
  Config cfg = default_config(kExperimentLqg);
  cfg.set("trials", "1000");
  const auto settings = ExperimentSettings::from_config(cfg);
  const auto result = run_experiment(settings);
  const auto paired = compare_baseline(settings);

  bool clean_optimum_at_inf = false;
  double beta_star_02 = -1.0, beta_star_04 = -1.0;
  for (const auto& row : result.rows) {
    if (!row.is_beta_star) continue;
    if (row.sigma2 == 0.0) clean_optimum_at_inf = std::isinf(row.beta);
    if (row.sigma2 == 0.2) beta_star_02 = row.beta;
    if (row.sigma2 == 0.4) beta_star_04 = row.beta;
  }
  double z02 = kInf, z04 = kInf;
  for (const auto& row : paired) {
    if (row.se_diff <= 0.0) continue;
    const double z = row.mean_diff / row.se_diff;
    if (row.sigma2 == 0.2) z02 = std::min(z02, z);
    if (row.sigma2 == 0.4) z04 = std::min(z04, z);
  }
  const bool pass = clean_optimum_at_inf && z02 <= -3.0 && z04 <= -3.0 &&
                    beta_star_04 <= beta_star_02;
  return {pass, "sigma2=0 optimum at inf: " + std::string(clean_optimum_at_inf ? "yes" : "no") +
                    ", best z(0.2) " + fmt(z02) + ", best z(0.4) " + fmt(z04) +
                    ", beta*(0.4)=" + fmt(beta_star_04) + " <= beta*(0.2)=" + fmt(beta_star_02)};
}

// ----- 8: nonlinear SV-MPC trend ----- //
Outcome check_nonlinear_trend() {
  Config cfg = default_config(kExperimentSvmpc);
  cfg.set("beta.list", "0.3, 1, 3, 10");
  cfg.set("sigma2", "1.2");
  cfg.set("trials", "100");
  cfg.set("svgd.particles", "12");
  cfg.set("svgd.iterations", "100");
  cfg.set("seed", "14");
  const auto settings = ExperimentSettings::from_config(cfg);
  const auto paired = compare_baseline(settings);
  double best_z = kInf;
  double best_beta = -1.0;
  for (const auto& row : paired) {
    if (row.se_diff <= 0.0) continue;
    const double z = row.mean_diff / row.se_diff;
    if (z < best_z) {
      best_z = z;
      best_beta = row.beta;
    }
  }
  return {best_z <= -2.0, "best paired z " + fmt(best_z) + " at beta " + fmt(best_beta) +
                              " (needs <= -2)"};
}

// ----- 9: double-slit passage trend ----- //
Outcome check_slit_trend() {
  Config cfg = default_config(kExperimentDoubleSlit);
  cfg.set("trials", "400");
  const auto settings = ExperimentSettings::from_config(cfg);
  const auto result = run_experiment(settings);
  // rows come back beta-ascending: 0.5, 2, 10
  if (result.rows.size() != 3) return {false, "expected 3 rows"};
  for (const auto& row : result.rows) {
    const int accepted = static_cast<int>(std::lround(row.n_trials * (1.0 - row.failure_fraction)));
    if (accepted < 200) {
      return {false, "only " + std::to_string(accepted) + " accepted rollouts at beta " +
                         fmt(row.beta)};
    }
  }
  // strictly increasing wide fraction as beta decreases, pairwise 2-proportion
  auto two_prop_z = [](const SweepRow& lo, const SweepRow& hi) {
    const double p1 = lo.wide_fraction, p2 = hi.wide_fraction;
    const int n1 = lo.passage_count, n2 = hi.passage_count;
    const double pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
    const double se = std::sqrt(pooled * (1 - pooled) * (1.0 / n1 + 1.0 / n2));
    return (p1 - p2) / se;
  };
  const double z01 = two_prop_z(result.rows[0], result.rows[1]);
  const double z12 = two_prop_z(result.rows[1], result.rows[2]);
  const bool pass = z01 > 1.959963984540054 && z12 > 1.959963984540054;
  std::ostringstream detail;
  detail << "wide fractions " << fmt(result.rows[0].wide_fraction) << " > "
         << fmt(result.rows[1].wide_fraction) << " > " << fmt(result.rows[2].wide_fraction)
         << " (z " << fmt(z01) << ", " << fmt(z12) << ")";
  return {pass, detail.str()};
}

// ----- 10: single-particle SVGD degenerates to gradient descent ----- //
Outcome check_svgd_degenerate() {
  Vec c(2);
  c << 0.7, -0.3;
  class Quad : public TrajectoryHamiltonian {
   public:
    explicit Quad(Vec c) : c_(std::move(c)) {}
    int sequence_length() const override { return 1; }
    int input_dim() const override { return 2; }
    double evaluate(const std::vector<Vec>& u) const override {
      return 0.5 * (u[0] - c_).squaredNorm();
    }

   private:
    Vec c_;
  } ham(c);
  SequencePrior prior;
  prior.steps.emplace_back(Vec::Zero(2), Mat::Identity(2, 2));
  const double beta = 2.0, step = 0.05;

  double worst = 0.0;
  for (int iters = 1; iters <= 50; ++iters) {
    SvgdConfig cfg;
    cfg.n_particles = 1;
    cfg.n_iterations = iters;
    cfg.step_size = step;
    cfg.beta = beta;
    cfg.overshoot_tolerance = 1e9;
    Rng rng(31);
    const auto got = svgd_sample_control(ham, prior, cfg, rng).sequence[0];

    Rng rng2(31);
    Vec u = rng2.gaussian_vector(2);
    std::vector<Vec> wrap{u};
    for (int i = 0; i < iters; ++i) {
      const double h = 1e-5;
      Vec g(2);
      for (int k = 0; k < 2; ++k) {
        std::vector<Vec> up{wrap[0]}, um{wrap[0]};
        up[0][k] += h;
        um[0][k] -= h;
        g[k] = beta * (ham.evaluate(up) - ham.evaluate(um)) / (2 * h);
      }
      g += wrap[0];  // gradient of -log prior
      wrap[0] -= step * g;
    }
    worst = std::max(worst, (got - wrap[0]).norm());
  }
  return {worst <= 1e-10, "max per-iteration-count deviation " + fmt(worst)};
}

// ----- 11: determinism ----- //
Outcome check_determinism() {
  bool pass = true;
  std::ostringstream detail;

  {
    Config cfg = default_config(kExperimentLqg);
    cfg.set("beta.grid", "0.5:50:5");
    cfg.set("sigma2", "0, 0.4");
    cfg.set("trials", "100");
    auto s = ExperimentSettings::from_config(cfg);
    const auto a = sweep_to_csv(run_experiment(s));
    const auto b = sweep_to_csv(run_experiment(s));
    s.threads = 4;
    const auto c = sweep_to_csv(run_experiment(s));
    pass = pass && a == b && a == c;
    detail << "lqg serial/repeat/parallel " << (a == b && a == c ? "identical" : "DIFFER");
  }
  {
    Config cfg = default_config(kExperimentDoubleSlit);
    cfg.set("trials", "60");
    cfg.set("is.samples", "2048");
    auto s = ExperimentSettings::from_config(cfg);
    const auto a = sweep_to_csv(run_experiment(s));
    s.threads = 3;
    const auto b = sweep_to_csv(run_experiment(s));
    pass = pass && a == b;
    detail << "; slit serial/parallel " << (a == b ? "identical" : "DIFFER");
  }
  {
    Config cfg = default_config(kExperimentSvmpc);
    cfg.set("beta.list", "1");
    cfg.set("beta.include_inf", "false");
    cfg.set("sigma2", "0.4");
    cfg.set("trials", "4");
    cfg.set("svgd.particles", "6");
    cfg.set("svgd.iterations", "25");
    auto s = ExperimentSettings::from_config(cfg);
    const auto a = sweep_to_csv(run_experiment(s));
    s.threads = 2;
    const auto b = sweep_to_csv(run_experiment(s));
    pass = pass && a == b;
    detail << "; svmpc serial/parallel " << (a == b ? "identical" : "DIFFER");
  }
  return {pass, detail.str()};
}

struct Check {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Check> checks = {
      {"lqr-limit", check_lqr_limit},
      {"prior-limit", check_prior_limit},
      {"gibbs-enumeration", check_gibbs_enumeration},
      {"free-energy-identities", check_free_energy},
      {"dp-audit-consistency", check_dp_audit},
      {"bound-validity", check_bound_validity},
      {"linear-cost-trend", check_linear_trend},
      {"nonlinear-cost-trend", check_nonlinear_trend},
      {"slit-passage-trend", check_slit_trend},
      {"svgd-degenerate-case", check_svgd_degenerate},
      {"determinism", check_determinism},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--list") == 0) {
      for (std::size_t k = 0; k < checks.size(); ++k) {
        std::cout << (k + 1) << " " << checks[k].name << "\n";
      }
      return 0;
    }
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
    }
  }

  int failures = 0;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    if (only != 0 && static_cast<int>(k + 1) != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = checks[k].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%2zu] %s  %-24s (%.1fs) %s\n", k + 1, outcome.pass ? "PASS" : "FAIL",
                checks[k].name, seconds, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
