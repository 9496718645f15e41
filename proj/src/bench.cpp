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

#include "brdp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "brdp/parallel.hpp"

namespace brdp {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

double parse_csv_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::nan("");
  return std::strtod(s.c_str(), nullptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(line);
  while (std::getline(in, token, sep)) out.push_back(token);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

Mat scaled_identity(int n, double s) { return s * Mat::Identity(n, n); }

// A trial-local playback of a fixed input sequence.
class ScriptedPolicy : public StepPolicy {
 public:
  explicit ScriptedPolicy(std::vector<Vec> plan) : plan_(std::move(plan)) {}
  Vec sample(int t, const Vec&, Rng&) override { return plan_.at(t); }

 private:
  std::vector<Vec> plan_;
};

struct CellKey {
  double beta = 0.0;  // +inf for baseline
  double sigma2 = 0.0;
};

struct CellData {
  CellKey key;
  std::vector<double> costs;
  double wide_fraction = std::nan("");
  int wide_count = -1;
  int passage_count = -1;
  double ess_mean = std::nan("");
  double gamma = std::nan("");
  std::optional<double> bound;
  double bound_ci95 = std::nan("");
  double delta_j = std::nan("");
  double delta_j_ci95 = std::nan("");
  double j_off_mean = std::nan("");
  std::vector<Trajectory> sample_trajectories;
};

// ----- experiment wiring ----- //

struct LqgSetup {
  LqgProblem problem;
  ControlSystem system;
  std::vector<Mat> lqr_gains;
};

LqgSetup make_lqg_setup(const ExperimentSettings& s) {
  LqgSetup setup;
  const auto [A, B] = linearize_quadrotor(s.quad);
  setup.problem.A = A;
  setup.problem.B = B;
  setup.problem.Q = scaled_identity(6, s.q_scale);
  setup.problem.R = scaled_identity(2, s.r_scale);
  setup.problem.Qf = scaled_identity(6, s.qf_scale);
  setup.problem.horizon = s.quad.horizon;
  setup.problem.prior = project_prior_through_lqr(
      setup.problem, quadrotor_x0_mean(), Mat(quadrotor_x0_variance().asDiagonal()),
      s.prior_ridge);
  setup.problem.validate();
  setup.system = linear_quadratic_system(A, B, setup.problem.Q, setup.problem.R,
                                         setup.problem.Qf, setup.problem.horizon,
                                         quadrotor_initial_distribution());
  setup.lqr_gains = lqr_reference(setup.problem);
  return setup;
}

struct SvmpcSetup {
  ControlSystem system;
  SequencePrior prior;  // absolute thrust coordinates
  StepDerivatives derivs;
};

SvmpcSetup make_svmpc_setup(const ExperimentSettings& s) {
  SvmpcSetup setup;
  const Mat Q = scaled_identity(6, s.q_scale);
  const Mat R = scaled_identity(2, s.r_scale);
  const Mat Qf = scaled_identity(6, s.qf_scale);
  setup.system = quadrotor_nonlinear_system(s.quad, Q, R, Qf, quadrotor_initial_distribution());

  LqgProblem lin;
  const auto [A, B] = linearize_quadrotor(s.quad);
  lin.A = A;
  lin.B = B;
  lin.Q = Q;
  lin.R = R;
  lin.Qf = Qf;
  lin.horizon = s.quad.horizon;
  const auto deviation_prior = project_prior_through_lqr(
      lin, quadrotor_x0_mean(), Mat(quadrotor_x0_variance().asDiagonal()), s.prior_ridge);
  Vec hover(2);
  hover << s.quad.hover_thrust(), s.quad.hover_thrust();
  for (const auto& p : deviation_prior) {
    setup.prior.steps.emplace_back(p.mean() + hover, p.cov());
  }

  const QuadrotorParams quad = s.quad;
  const double hover_thrust = quad.hover_thrust();
  setup.derivs.dynamics_jac = [quad](int, const Vec& x, const Vec& u, Mat& A_out, Mat& B_out) {
    quadrotor_rk4_step_jacobians(quad, x, u, A_out, B_out);
  };
  setup.derivs.stage_cost_dx = [Q](int, const Vec& x, const Vec&) -> Vec { return Q * x; };
  setup.derivs.stage_cost_du = [R, hover_thrust](int, const Vec&, const Vec& u) -> Vec {
    return R * (u.array() - hover_thrust).matrix();
  };
  setup.derivs.terminal_cost_dx = [Qf](const Vec& x) -> Vec { return Qf * x; };
  return setup;
}

SequencePrior slit_prior(const SlitGeometry& g) {
  SequencePrior prior;
  const Mat cov = g.prior_std * g.prior_std * Mat::Identity(2, 2);
  for (int t = 0; t < g.horizon; ++t) prior.steps.emplace_back(Vec::Zero(2), cov);
  return prior;
}

std::vector<Vec> argmin_is_sequence(const TrajectoryHamiltonian& ham,
                                    const SequencePrior& prior, int n_samples, Rng& rng) {
  double best = kInf;
  std::vector<Vec> best_seq;
  for (int i = 0; i < n_samples; ++i) {
    auto seq = prior.sample(rng);
    const double h = ham.evaluate(seq);
    if (h < best) {
      best = h;
      best_seq = std::move(seq);
    }
  }
  if (!std::isfinite(best)) {
    throw InfeasibleProposalError("argmin sampling: no finite-cost proposal");
  }
  return best_seq;
}

struct SlitTrial {
  double cost = kInf;
  double ess = std::nan("");
  int passage = 0;  // 0 none, 1 wide, 2 narrow
  Trajectory trajectory;
};

CellData run_slit_cell(const ExperimentSettings& s, const ControlSystem& system,
                       const SequencePrior& prior, double beta, double sigma2) {
  CellData cell;
  cell.key = {beta, sigma2};
  Vec noise_shape = Vec::Ones(2);
  const Estimator estimator = gaussian_estimator(sigma2, noise_shape);
  const bool open_loop = s.replan_every <= 0;

  std::vector<SlitTrial> trials(s.n_trials);
  parallel_for(s.n_trials, s.threads, [&](int i) {
    TrialRngs rngs = TrialRngs::derive(s.seed, static_cast<std::uint64_t>(i));
    SlitTrial& trial = trials[i];
    try {
      std::unique_ptr<StepPolicy> policy;
      if (open_loop) {
        const CostToGoHamiltonian ham(system, 0, system.sample_initial(rngs.init));
        if (std::isinf(beta)) {
          policy = std::make_unique<ScriptedPolicy>(
              argmin_is_sequence(ham, prior, s.is_samples, rngs.policy));
        } else {
          auto result =
              importance_sample_control(ham, prior, beta, s.is_samples, rngs.policy);
          trial.ess = result.ess;
          policy = std::make_unique<ScriptedPolicy>(std::move(result.sequence));
        }
      } else {
        SequenceSolver solver = [&](int t0, const Vec& x0, Rng& rng) {
          const CostToGoHamiltonian ham(system, t0, x0);
          SequencePrior tail;
          tail.steps.assign(prior.steps.begin() + t0, prior.steps.end());
          if (std::isinf(beta)) {
            return argmin_is_sequence(ham, tail, s.is_samples, rng);
          }
          return importance_sample_control(ham, tail, beta, s.is_samples, rng).sequence;
        };
        policy = receding_horizon_policy(solver, s.replan_every)();
      }
      // the initial-state channel was consumed above for the open-loop solve;
      // re-derive so the rollout sees the same start
      TrialRngs roll_rngs = TrialRngs::derive(s.seed, static_cast<std::uint64_t>(i));
      trial.trajectory = rollout(system, *policy, estimator, roll_rngs);
      trial.cost = trial.trajectory.total_cost;
      const SlitPassage p = classify_passage(trial.trajectory, s.slit);
      trial.passage = p == SlitPassage::wide ? 1 : (p == SlitPassage::narrow ? 2 : 0);
    } catch (const InfeasibleProposalError&) {
      trial.cost = kInf;
    }
  });

  cell.costs.resize(s.n_trials);
  int wide = 0, narrow = 0, accepted = 0;
  double ess_sum = 0.0;
  int ess_count = 0;
  for (int i = 0; i < s.n_trials; ++i) {
    cell.costs[i] = trials[i].cost;
    if (std::isfinite(trials[i].cost)) {
      ++accepted;
      if (trials[i].passage == 1) ++wide;
      if (trials[i].passage == 2) ++narrow;
    }
    if (std::isfinite(trials[i].ess)) {
      ess_sum += trials[i].ess;
      ++ess_count;
    }
    if (static_cast<int>(cell.sample_trajectories.size()) < s.dump_trajectories &&
        std::isfinite(trials[i].cost)) {
      cell.sample_trajectories.push_back(trials[i].trajectory);
    }
  }
  if (wide + narrow > 0) {
    cell.wide_fraction = static_cast<double>(wide) / (wide + narrow);
    cell.wide_count = wide;
    cell.passage_count = wide + narrow;
  }
  if (ess_count > 0) cell.ess_mean = ess_sum / ess_count;
  (void)accepted;
  return cell;
}

SvgdConfig svmpc_svgd_config(const ExperimentSettings& s, double beta) {
  SvgdConfig cfg;
  cfg.n_particles = s.svgd_particles;
  cfg.n_iterations = s.svgd_iterations;
  cfg.step_size = s.svgd_step;
  cfg.kernel_bandwidth = s.svgd_bandwidth;
  cfg.overshoot_tolerance = s.svgd_overshoot_tol;
  cfg.whiten = true;
  if (std::isinf(beta)) {
    cfg.argmin_mode = true;
    cfg.beta = 1.0;
  } else {
    cfg.beta = beta;
  }
  return cfg;
}

PolicyFactory svmpc_policy_factory(const ExperimentSettings& s, const SvmpcSetup& setup,
                                   double beta) {
  const SvgdConfig cfg = svmpc_svgd_config(s, beta);
  const ControlSystem* system = &setup.system;
  const SequencePrior* prior = &setup.prior;
  const StepDerivatives* derivs = &setup.derivs;
  SequenceSolver solver = [system, prior, derivs, cfg](int t0, const Vec& x0, Rng& rng) {
    const CostToGoHamiltonian ham(*system, t0, x0, *derivs);
    SequencePrior tail;
    tail.steps.assign(prior->steps.begin() + t0, prior->steps.end());
    return svgd_sample_control(ham, tail, cfg, rng).sequence;
  };
  return receding_horizon_policy(std::move(solver), std::max(1, s.replan_every));
}

// All (beta, sigma2) cost cells for one experiment, beta = inf rows included.
std::vector<CellData> run_cells(const ExperimentSettings& s) {
  std::vector<double> betas = s.betas;
  std::sort(betas.begin(), betas.end());
  if (s.include_inf) betas.push_back(kInf);

  std::vector<CellData> cells;

  if (s.experiment == kExperimentDoubleSlit) {
    const ControlSystem system = double_slit_system(s.slit);
    const SequencePrior prior = slit_prior(s.slit);
    for (double beta : betas) {
      for (double sigma2 : s.sigma2_list) {
        cells.push_back(run_slit_cell(s, system, prior, beta, sigma2));
      }
    }
    return cells;
  }

  if (s.experiment == kExperimentLqg) {
    LqgSetup setup = make_lqg_setup(s);
    std::vector<std::unique_ptr<BrLqgPolicy>> policies;
    for (double beta : betas) {
      PolicyFactory factory;
      const BrLqgPolicy* policy = nullptr;
      if (std::isinf(beta)) {
        factory = lqr_policy_factory(setup.lqr_gains);
      } else {
        policies.push_back(std::make_unique<BrLqgPolicy>(solve_br_lqg(setup.problem, beta)));
        policy = policies.back().get();
        factory = br_lqg_policy_factory(*policy);
      }
      for (double sigma2 : s.sigma2_list) {
        CellData cell;
        cell.key = {beta, sigma2};
        const Estimator estimator = gaussian_estimator(sigma2, quadrotor_noise_shape());
        cell.costs = monte_carlo_trial_costs(setup.system, factory, estimator, s.n_trials,
                                             s.seed, s.threads);
        if (s.certify && policy != nullptr) {
          const std::uint64_t cert_seed = Rng::stream(s.seed, 0x3c6ef372fe94f82bull).next_u64();
          const DpCertificate cert = build_br_lqg_certificate(
              setup.system, setup.problem, *policy, estimator, s.cert_quantile,
              s.cert_level_samples, s.cert_gamma_samples, cert_seed, s.threads);
          const RobustnessReport report = robustness_bound(
              setup.system, factory, estimator, cert,
              br_lqg_step_kl(*policy, setup.problem), s.bound_samples, s.n_trials,
              cert_seed, s.threads);
          cell.gamma = cert.gamma;
          cell.bound = report.bound;
          cell.bound_ci95 = report.bound_ci95;
          cell.delta_j = report.delta_j;
          cell.delta_j_ci95 = report.delta_j_ci95;
          cell.j_off_mean = report.j_off.mean;
        }
        if (s.dump_trajectories > 0) {
          for (int i = 0; i < std::min(s.dump_trajectories, s.n_trials); ++i) {
            TrialRngs rngs = TrialRngs::derive(s.seed, static_cast<std::uint64_t>(i));
            auto pol = factory();
            cell.sample_trajectories.push_back(rollout(setup.system, *pol, estimator, rngs));
          }
        }
        cells.push_back(std::move(cell));
      }
    }
    return cells;
  }

  if (s.experiment == kExperimentSvmpc) {
    SvmpcSetup setup = make_svmpc_setup(s);
    for (double beta : betas) {
      const PolicyFactory factory = svmpc_policy_factory(s, setup, beta);
      for (double sigma2 : s.sigma2_list) {
        CellData cell;
        cell.key = {beta, sigma2};
        const Estimator estimator = gaussian_estimator(sigma2, quadrotor_noise_shape());
        cell.costs = monte_carlo_trial_costs(setup.system, factory, estimator, s.n_trials,
                                             s.seed, s.threads);
        if (s.dump_trajectories > 0) {
          for (int i = 0; i < std::min(s.dump_trajectories, s.n_trials); ++i) {
            TrialRngs rngs = TrialRngs::derive(s.seed, static_cast<std::uint64_t>(i));
            auto pol = factory();
            cell.sample_trajectories.push_back(rollout(setup.system, *pol, estimator, rngs));
          }
        }
        cells.push_back(std::move(cell));
      }
    }
    return cells;
  }

  throw ConfigError("unknown experiment id '" + s.experiment + "'");
}

void mark_beta_stars(std::vector<SweepRow>& rows) {
  // one flag per sigma2 over the measured mean cost, ties toward smaller beta
  std::vector<double> sigmas;
  for (const auto& r : rows) {
    if (std::find(sigmas.begin(), sigmas.end(), r.sigma2) == sigmas.end()) {
      sigmas.push_back(r.sigma2);
    }
  }
  for (double sig : sigmas) {
    std::vector<BetaGridPoint> grid;
    for (const auto& r : rows) {
      if (r.sigma2 == sig) grid.push_back({r.beta, r.mean_cost});
    }
    try {
      const BetaGridPoint best = optimize_beta(grid);
      for (auto& r : rows) {
        if (r.sigma2 == sig && r.beta == best.beta) r.is_beta_star = true;
      }
    } catch (const GridExhaustedError&) {
      // all cells failed; leave unmarked
    }
  }
}

void persist(const ExperimentSettings& s, const SweepResult& result,
             const std::vector<CellData>& cells) {
  if (s.out_dir.empty()) return;
  std::filesystem::create_directories(s.out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(s.out_dir) / name).string();
  };
  {
    std::ofstream csv(path("results.csv"), std::ios::binary);
    csv << sweep_to_csv(result);
  }
  {
    nlohmann::json j;
    j["experiment"] = s.experiment;
    j["seed"] = s.seed;
    j["n_trials"] = s.n_trials;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : result.rows) {
      nlohmann::json row;
      row["beta"] = std::isinf(r.beta) ? nlohmann::json("inf") : nlohmann::json(r.beta);
      row["sigma2"] = r.sigma2;
      row["mean_cost"] = r.mean_cost;
      row["std_cost"] = r.std_cost;
      row["failure_fraction"] = r.failure_fraction;
      row["n_trials"] = r.n_trials;
      row["is_beta_star"] = r.is_beta_star;
      if (r.bound) row["bound"] = *r.bound;
      if (!std::isnan(r.wide_fraction)) row["wide_fraction"] = r.wide_fraction;
      if (r.passage_count >= 0) {
        row["wide_count"] = r.wide_count;
        row["passage_count"] = r.passage_count;
      }
      if (!std::isnan(r.ess_mean)) row["ess_mean"] = r.ess_mean;
      if (!std::isnan(r.gamma)) row["gamma"] = r.gamma;
      if (!std::isnan(r.delta_j)) row["delta_j"] = r.delta_j;
      if (!std::isnan(r.delta_j_ci95)) row["delta_j_ci95"] = r.delta_j_ci95;
      if (!std::isnan(r.bound_ci95)) row["bound_ci95"] = r.bound_ci95;
      if (!std::isnan(r.j_off_mean)) row["j_off_mean"] = r.j_off_mean;
      j["rows"].push_back(row);
    }
    std::ofstream out(path("results.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].sample_trajectories.empty()) continue;
    std::ofstream out(path("trajectories_cell" + std::to_string(i) + ".jsonl"),
                      std::ios::binary);
    dump_trajectories_jsonl(out, cells[i].sample_trajectories);
  }
}

}  // namespace

// ----- settings ----- //

ExperimentSettings ExperimentSettings::from_config(const Config& cfg) {
  ExperimentSettings s;
  s.experiment = cfg.get_string("experiment");
  if (cfg.has("beta.list")) {
    s.betas = cfg.get_double_list("beta.list");
  } else {
    s.betas = parse_log_grid(cfg.get_string("beta.grid", "0.1:1000:20"));
  }
  std::sort(s.betas.begin(), s.betas.end());
  for (double b : s.betas) {
    if (!(b > 0.0) || std::isinf(b)) {
      throw ConfigError("beta grid entries must be finite and positive; "
                        "the inf row is controlled by beta.include_inf");
    }
  }
  s.include_inf = cfg.get_bool("beta.include_inf", true);
  s.sigma2_list = cfg.get_double_list("sigma2", {0.0, 0.2, 0.4});
  s.n_trials = cfg.get_int("trials", 1000);
  if (s.n_trials < 1) throw ConfigError("trials must be >= 1");
  s.seed = cfg.get_u64("seed", 0);
  s.threads = resolve_threads(cfg.get_int("threads", 1));
  s.out_dir = cfg.get_string("out", "");
  s.dump_trajectories = cfg.get_int("dump_trajectories", 0);

  s.quad.mass = cfg.get_double("system.mass", s.quad.mass);
  s.quad.inertia = cfg.get_double("system.inertia", s.quad.inertia);
  s.quad.gravity = cfg.get_double("system.gravity", s.quad.gravity);
  s.quad.arm = cfg.get_double("system.arm", s.quad.arm);
  s.quad.dt = cfg.get_double("system.dt", s.quad.dt);
  s.quad.horizon = cfg.get_int("system.horizon", s.quad.horizon);
  s.q_scale = cfg.get_double("cost.q", s.q_scale);
  s.r_scale = cfg.get_double("cost.r", s.r_scale);
  s.qf_scale = cfg.get_double("cost.qf", s.qf_scale);
  s.prior_ridge = cfg.get_double("prior.ridge", s.prior_ridge);

  s.slit.divider_x = cfg.get_double("slit.divider_x", s.slit.divider_x);
  s.slit.divider_half_thickness =
      cfg.get_double("slit.divider_half_thickness", s.slit.divider_half_thickness);
  s.slit.wide_center = cfg.get_double("slit.wide_center", s.slit.wide_center);
  s.slit.wide_half_width = cfg.get_double("slit.wide_half_width", s.slit.wide_half_width);
  s.slit.narrow_center = cfg.get_double("slit.narrow_center", s.slit.narrow_center);
  s.slit.narrow_half_width =
      cfg.get_double("slit.narrow_half_width", s.slit.narrow_half_width);
  if (cfg.has("slit.goal")) {
    const auto g = cfg.get_double_list("slit.goal");
    if (g.size() != 4) throw ConfigError("slit.goal must be xmin,xmax,ymin,ymax");
    s.slit.goal = Rect{g[0], g[1], g[2], g[3]};
  }
  if (cfg.has("slit.start")) {
    const auto st = cfg.get_double_list("slit.start");
    if (st.size() != 2) throw ConfigError("slit.start must be x,y");
    s.slit.start_x = st[0];
    s.slit.start_y = st[1];
  }
  s.slit.horizon = cfg.get_int("slit.horizon", s.slit.horizon);
  s.slit.input_bound = cfg.get_double("slit.input_bound", s.slit.input_bound);
  s.slit.prior_std = cfg.get_double("slit.prior_std", s.slit.prior_std);
  s.is_samples = cfg.get_int("is.samples", s.is_samples);
  s.replan_every = cfg.get_int("replan_every", s.replan_every);

  s.svgd_particles = cfg.get_int("svgd.particles", s.svgd_particles);
  s.svgd_iterations = cfg.get_int("svgd.iterations", s.svgd_iterations);
  s.svgd_step = cfg.get_double("svgd.step", s.svgd_step);
  s.svgd_overshoot_tol = cfg.get_double("svgd.overshoot_tol", s.svgd_overshoot_tol);
  s.svgd_bandwidth = cfg.get_double("svgd.bandwidth", s.svgd_bandwidth);

  s.certify = cfg.get_bool("certify", s.certify);
  s.cert_quantile = cfg.get_double("cert.quantile", s.cert_quantile);
  s.cert_level_samples = cfg.get_int("cert.level_samples", s.cert_level_samples);
  s.cert_gamma_samples = cfg.get_int("cert.gamma_samples", s.cert_gamma_samples);
  s.bound_samples = cfg.get_int("cert.bound_samples", s.bound_samples);
  return s;
}

Config default_config(const std::string& experiment) {
  Config cfg;
  cfg.set("experiment", experiment);
  cfg.set("seed", "0");
  cfg.set("threads", "1");
  if (experiment == kExperimentDoubleSlit) {
    cfg.set("beta.list", "0.5, 2, 10");
    cfg.set("beta.include_inf", "false");
    cfg.set("sigma2", "0");
    cfg.set("trials", "400");
    cfg.set("is.samples", "8192");
    cfg.set("replan_every", "0");
  } else if (experiment == kExperimentLqg) {
    cfg.set("beta.grid", "0.1:1000:20");
    cfg.set("beta.include_inf", "true");
    cfg.set("sigma2", "0, 0.2, 0.4");
    cfg.set("trials", "1000");
    cfg.set("certify", "false");
  } else if (experiment == kExperimentSvmpc) {
    cfg.set("beta.grid", "0.1:1000:10");
    cfg.set("beta.include_inf", "true");
    cfg.set("sigma2", "0, 0.2, 0.4");
    cfg.set("trials", "100");
    cfg.set("svgd.particles", "16");
    cfg.set("svgd.iterations", "150");
    cfg.set("svgd.step", "0.1");
    cfg.set("replan_every", "1");
  } else {
    throw ConfigError("unknown experiment id '" + experiment + "'");
  }
  return cfg;
}

// ----- operations ----- //

SweepResult run_experiment(const ExperimentSettings& settings) {
  const std::vector<CellData> cells = run_cells(settings);
  SweepResult result;
  result.rows.reserve(cells.size());
  for (const CellData& cell : cells) {
    const CostSummary summary = summarize_costs(cell.costs);
    SweepRow row;
    row.experiment = settings.experiment;
    row.beta = cell.key.beta;
    row.sigma2 = cell.key.sigma2;
    row.mean_cost = summary.mean;
    row.std_cost = summary.stddev;
    row.failure_fraction = summary.failure_fraction;
    row.n_trials = summary.n_trials;
    row.bound = cell.bound;
    row.wide_fraction = cell.wide_fraction;
    row.wide_count = cell.wide_count;
    row.passage_count = cell.passage_count;
    row.ess_mean = cell.ess_mean;
    row.gamma = cell.gamma;
    row.delta_j = cell.delta_j;
    row.delta_j_ci95 = cell.delta_j_ci95;
    row.bound_ci95 = cell.bound_ci95;
    row.j_off_mean = cell.j_off_mean;
    result.rows.push_back(std::move(row));
  }
  mark_beta_stars(result.rows);
  persist(settings, result, cells);
  return result;
}

std::vector<PairedRow> compare_baseline(const ExperimentSettings& settings) {
  ExperimentSettings s = settings;
  s.include_inf = true;
  s.dump_trajectories = 0;
  const std::vector<CellData> cells = run_cells(s);

  std::vector<PairedRow> rows;
  for (const CellData& cell : cells) {
    if (std::isinf(cell.key.beta)) continue;
    const auto baseline = std::find_if(cells.begin(), cells.end(), [&](const CellData& c) {
      return std::isinf(c.key.beta) && c.key.sigma2 == cell.key.sigma2;
    });
    if (baseline == cells.end()) continue;
    PairedRow row;
    row.experiment = s.experiment;
    row.beta = cell.key.beta;
    row.sigma2 = cell.key.sigma2;
    std::vector<double> diff;
    for (std::size_t i = 0; i < cell.costs.size(); ++i) {
      if (std::isfinite(cell.costs[i]) && std::isfinite(baseline->costs[i])) {
        diff.push_back(cell.costs[i] - baseline->costs[i]);
      }
    }
    row.n_trials = static_cast<int>(diff.size());
    if (!diff.empty()) {
      double mean = 0.0;
      for (double d : diff) mean += d;
      mean /= diff.size();
      double ss = 0.0;
      for (double d : diff) ss += (d - mean) * (d - mean);
      const double sd = diff.size() > 1 ? std::sqrt(ss / (diff.size() - 1.0)) : 0.0;
      row.mean_diff = mean;
      row.se_diff = sd / std::sqrt(static_cast<double>(diff.size()));
      row.ci95 = kZ95 * row.se_diff;
    } else {
      row.mean_diff = std::nan("");
      row.se_diff = std::nan("");
      row.ci95 = std::nan("");
    }
    rows.push_back(row);
  }
  if (!s.out_dir.empty()) {
    std::filesystem::create_directories(s.out_dir);
    std::ofstream out((std::filesystem::path(s.out_dir) / "paired.csv").string(),
                      std::ios::binary);
    out << paired_to_csv(rows);
  }
  return rows;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out =
      "experiment,beta,sigma2,mean_cost,std_cost,failure_fraction,n_trials,is_beta_star,"
      "bound\n";
  for (const SweepRow& r : result.rows) {
    out += r.experiment + ',';
    out += fmt_double(r.beta) + ',';
    out += fmt_double(r.sigma2) + ',';
    out += fmt_double(r.mean_cost) + ',';
    out += fmt_double(r.std_cost) + ',';
    out += fmt_double(r.failure_fraction) + ',';
    out += std::to_string(r.n_trials) + ',';
    out += r.is_beta_star ? "1," : "0,";
    out += r.bound ? fmt_double(*r.bound) : "";
    out += '\n';
  }
  return out;
}

SweepResult sweep_from_csv(const std::string& text) {
  SweepResult result;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("sweep_from_csv: empty input");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 9) {
      throw std::invalid_argument("sweep_from_csv: expected 9 fields, got " +
                                  std::to_string(fields.size()));
    }
    SweepRow r;
    r.experiment = fields[0];
    r.beta = parse_csv_double(fields[1]);
    r.sigma2 = parse_csv_double(fields[2]);
    r.mean_cost = parse_csv_double(fields[3]);
    r.std_cost = parse_csv_double(fields[4]);
    r.failure_fraction = parse_csv_double(fields[5]);
    r.n_trials = std::atoi(fields[6].c_str());
    r.is_beta_star = fields[7] == "1";
    if (!fields[8].empty()) r.bound = parse_csv_double(fields[8]);
    result.rows.push_back(std::move(r));
  }
  return result;
}

std::string paired_to_csv(const std::vector<PairedRow>& rows) {
  std::string out = "experiment,beta,sigma2,mean_diff,se_diff,ci95,n_trials\n";
  for (const PairedRow& r : rows) {
    out += r.experiment + ',';
    out += fmt_double(r.beta) + ',';
    out += fmt_double(r.sigma2) + ',';
    out += fmt_double(r.mean_diff) + ',';
    out += fmt_double(r.se_diff) + ',';
    out += fmt_double(r.ci95) + ',';
    out += std::to_string(r.n_trials);
    out += '\n';
  }
  return out;
}

}  // namespace brdp
