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

#include "brdp/samplers.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace brdp {

std::vector<Vec> TrajectoryHamiltonian::gradient(const std::vector<Vec>& u_seq) const {
  constexpr double kStep = 1e-5;
  std::vector<Vec> g(u_seq.size());
  std::vector<Vec> probe = u_seq;
  for (std::size_t s = 0; s < u_seq.size(); ++s) {
    g[s] = Vec::Zero(u_seq[s].size());
    for (int i = 0; i < u_seq[s].size(); ++i) {
      const double saved = probe[s][i];
      probe[s][i] = saved + kStep;
      const double hi = evaluate(probe);
      probe[s][i] = saved - kStep;
      const double lo = evaluate(probe);
      probe[s][i] = saved;
      g[s][i] = (hi - lo) / (2.0 * kStep);
    }
  }
  return g;
}

CostToGoHamiltonian::CostToGoHamiltonian(const ControlSystem& system, int t0, Vec x0)
    : system_(&system), t0_(t0), x0_(std::move(x0)) {}

CostToGoHamiltonian::CostToGoHamiltonian(const ControlSystem& system, int t0, Vec x0,
                                         StepDerivatives derivs)
    : system_(&system), t0_(t0), x0_(std::move(x0)), has_derivs_(true),
      derivs_(std::move(derivs)) {}

double CostToGoHamiltonian::evaluate(const std::vector<Vec>& u_seq) const {
  Vec x = x0_;
  double total = 0.0;
  for (int s = 0; s < sequence_length(); ++s) {
    total += system_->stage_cost(t0_ + s, x, u_seq[s]);
    x = system_->dynamics(t0_ + s, x, u_seq[s], nullptr);
  }
  total += system_->terminal_cost(x);
  return total;
}

std::vector<Vec> CostToGoHamiltonian::gradient(const std::vector<Vec>& u_seq) const {
  if (!has_derivs_) {
    return TrajectoryHamiltonian::gradient(u_seq);
  }
  const int len = sequence_length();
  std::vector<Vec> xs(len + 1);
  std::vector<Mat> As(len), Bs(len);
  xs[0] = x0_;
  for (int s = 0; s < len; ++s) {
    derivs_.dynamics_jac(t0_ + s, xs[s], u_seq[s], As[s], Bs[s]);
    xs[s + 1] = system_->dynamics(t0_ + s, xs[s], u_seq[s], nullptr);
  }
  std::vector<Vec> g(len);
  Vec lambda = derivs_.terminal_cost_dx(xs[len]);
  for (int s = len - 1; s >= 0; --s) {
    g[s] = derivs_.stage_cost_du(t0_ + s, xs[s], u_seq[s]) + Bs[s].transpose() * lambda;
    lambda = derivs_.stage_cost_dx(t0_ + s, xs[s], u_seq[s]) + As[s].transpose() * lambda;
  }
  return g;
}

std::vector<Vec> SequencePrior::sample(Rng& rng) const {
  std::vector<Vec> seq;
  seq.reserve(steps.size());
  for (const auto& s : steps) seq.push_back(s.sample(rng));
  return seq;
}

double SequencePrior::log_density(const std::vector<Vec>& u_seq) const {
  double lp = 0.0;
  for (std::size_t s = 0; s < steps.size(); ++s) lp += steps[s].log_density(u_seq[s]);
  return lp;
}

// ----- importance sampling ----- //

ImportanceSamplingResult importance_sample_control(const TrajectoryHamiltonian& ham,
                                                   const SequencePrior& prior, double beta,
                                                   int n_samples, Rng& rng) {
  if (n_samples < 2) {
    throw std::invalid_argument("importance_sample_control: n_samples must be >= 2");
  }
  if (beta < 0.0) {
    throw std::invalid_argument("importance_sample_control: beta must be >= 0");
  }
  std::vector<std::vector<Vec>> draws(n_samples);
  std::vector<double> log_w(n_samples);
  int n_finite = 0;
  for (int i = 0; i < n_samples; ++i) {
    draws[i] = prior.sample(rng);
    const double h = ham.evaluate(draws[i]);
    log_w[i] = std::isinf(h) ? -kInf : -beta * h;
    if (std::isfinite(log_w[i])) ++n_finite;
  }
  if (n_finite == 0) {
    throw InfeasibleProposalError(
        "importance_sample_control: all proposal weights are zero; increase n_samples "
        "or widen the prior");
  }
  const double log_sum = logsumexp(log_w);

  ImportanceSamplingResult result;
  result.weights.resize(n_samples);
  double sum_w2 = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    result.weights[i] = std::exp(log_w[i] - log_sum);
    sum_w2 += result.weights[i] * result.weights[i];
  }
  result.ess = 1.0 / sum_w2;
  result.log_z = log_sum - std::log(static_cast<double>(n_samples));
  result.finite_fraction = static_cast<double>(n_finite) / n_samples;
  result.n_samples = n_samples;

  double u = rng.uniform();
  int chosen = n_samples - 1;
  for (int i = 0; i < n_samples; ++i) {
    u -= std::exp(log_w[i] - log_sum);
    if (u < 0.0) {
      chosen = i;
      break;
    }
  }
  result.sequence = std::move(draws[chosen]);
  return result;
}

// ----- SVGD ----- //

namespace {

// Flat <-> per-step views of a particle.
std::vector<Vec> unflatten(const Vec& flat, int length, int dim) {
  std::vector<Vec> seq(length);
  for (int s = 0; s < length; ++s) seq[s] = flat.segment(s * dim, dim);
  return seq;
}

double median_sq_dist(const std::vector<Vec>& particles) {
  std::vector<double> d2;
  const int n = static_cast<int>(particles.size());
  d2.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      d2.push_back((particles[i] - particles[j]).squaredNorm());
    }
  }
  if (d2.empty()) return 1.0;
  const std::size_t mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
  return d2[mid];
}

}  // namespace

SvgdResult svgd_sample_control(const TrajectoryHamiltonian& ham, const SequencePrior& prior,
                               const SvgdConfig& config, Rng& rng) {
  if (config.n_particles < 1 || config.n_iterations < 0 || config.step_size <= 0.0) {
    throw std::invalid_argument("svgd_sample_control: invalid configuration");
  }
  if (!config.argmin_mode && !(config.beta > 0.0)) {
    throw std::invalid_argument("svgd_sample_control: beta must be positive");
  }
  const int len = prior.length();
  const int dim = prior.input_dim();
  const int flat_dim = len * dim;
  const int n = config.n_particles;

  std::vector<Mat> prior_precision;
  if (!config.whiten) {
    prior_precision.reserve(len);
    for (const auto& s : prior.steps) prior_precision.push_back(s.precision());
  }

  // Work coordinates: whitened (w = L^-1 (u - mean)) or plain input space.
  auto to_inputs = [&](const Vec& flat) {
    std::vector<Vec> seq = unflatten(flat, len, dim);
    if (config.whiten) {
      for (int s = 0; s < len; ++s) seq[s] = prior.steps[s].from_whitened(seq[s]);
    }
    return seq;
  };

  std::vector<Vec> particles(n, Vec::Zero(flat_dim));
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < len; ++s) {
      const Vec w = rng.gaussian_vector(dim);
      particles[i].segment(s * dim, dim) =
          config.whiten ? w : Vec(prior.steps[s].from_whitened(w));
    }
  }

  // Gradient of the work-coordinate objective at one particle.
  auto objective_gradient = [&](const Vec& flat, int particle_idx, int iter) {
    const std::vector<Vec> u_seq = to_inputs(flat);
    std::vector<Vec> gh = ham.gradient(u_seq);
    Vec g(flat_dim);
    for (int s = 0; s < len; ++s) {
      Vec gs = config.whiten ? prior.steps[s].whiten_gradient(gh[s]) : gh[s];
      if (config.argmin_mode) {
        g.segment(s * dim, dim) = -gs;  // descent on H
      } else {
        // ascent on log posterior: -beta dH + dlog prior
        Vec glp;
        if (config.whiten) {
          glp = -flat.segment(s * dim, dim);
        } else {
          glp = -prior_precision[s] * (u_seq[s] - prior.steps[s].mean());
        }
        g.segment(s * dim, dim) = -config.beta * gs + glp;
      }
    }
    if (!g.allFinite()) throw NonFiniteGradientError(particle_idx, iter);
    return g;
  };

  auto mean_particle_cost = [&](const std::vector<Vec>& parts) {
    Vec mean = Vec::Zero(flat_dim);
    for (const Vec& p : parts) mean += p;
    mean /= static_cast<double>(n);
    return ham.evaluate(to_inputs(mean));
  };

  double step = config.step_size;
  double previous_cost = mean_particle_cost(particles);
  int total_halvings = 0;

  for (int iter = 0; iter < config.n_iterations; ++iter) {
    std::vector<Vec> grads(n);
    for (int i = 0; i < n; ++i) grads[i] = objective_gradient(particles[i], i, iter);

    std::vector<Vec> drive(n);
    if (config.argmin_mode) {
      drive = grads;
    } else {
      double h = config.kernel_bandwidth;
      if (h <= 0.0) {
        h = std::max(median_sq_dist(particles), 1e-12) /
            (2.0 * std::log(static_cast<double>(n) + 1.0));
      }
      for (int i = 0; i < n; ++i) {
        Vec acc = Vec::Zero(flat_dim);
        for (int j = 0; j < n; ++j) {
          const Vec diff = particles[j] - particles[i];
          const double k = std::exp(-diff.squaredNorm() / h);
          acc += k * grads[j] - (2.0 / h) * k * diff;
        }
        drive[i] = acc / static_cast<double>(n);
      }
    }

    // Overshoot guard on the cost of the particle mean.
    std::vector<Vec> proposal(n);
    for (int attempt = 0;; ++attempt) {
      for (int i = 0; i < n; ++i) proposal[i] = particles[i] + step * drive[i];
      const double cost = mean_particle_cost(proposal);
      const double allowed =
          previous_cost + config.overshoot_tolerance * (std::abs(previous_cost) + 1e-9);
      if (std::isfinite(cost) && cost <= allowed) {
        particles.swap(proposal);
        previous_cost = cost;
        break;
      }
      if (attempt >= 10) {
        throw OvershootError("svgd_sample_control: step halved 10 times at iteration " +
                             std::to_string(iter) + " without curing the overshoot");
      }
      step *= 0.5;
      ++total_halvings;
    }

    if (config.trace != nullptr) {
      for (int i = 0; i < n; ++i) {
        nlohmann::json line;
        line["iteration"] = iter;
        line["particle"] = i;
        line["inputs"] =
            std::vector<double>(particles[i].data(), particles[i].data() + flat_dim);
        line["cost"] = ham.evaluate(to_inputs(particles[i]));
        (*config.trace) << line.dump() << "\n";
      }
    }
  }

  SvgdResult result;
  result.halvings = total_halvings;
  result.final_step = step;
  result.particles.reserve(n);
  result.costs.reserve(n);
  for (int i = 0; i < n; ++i) {
    result.particles.push_back(to_inputs(particles[i]));
    result.costs.push_back(ham.evaluate(result.particles.back()));
  }
  int chosen;
  if (config.argmin_mode) {
    chosen = static_cast<int>(std::min_element(result.costs.begin(), result.costs.end()) -
                              result.costs.begin());
  } else {
    chosen = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  }
  result.sequence = result.particles[chosen];
  return result;
}

// ----- receding horizon ----- //

namespace {

class RecedingHorizonPolicy : public StepPolicy {
 public:
  RecedingHorizonPolicy(SequenceSolver solver, int replan_every)
      : solver_(std::move(solver)), replan_every_(replan_every) {}

  Vec sample(int t, const Vec& x_est, Rng& rng) override {
    const int offset = t - solved_at_;
    const bool need_solve = plan_.empty() || t % replan_every_ == 0 || offset < 0 ||
                            offset >= static_cast<int>(plan_.size());
    if (need_solve) {
      plan_ = solver_(t, x_est, rng);
      solved_at_ = t;
      if (plan_.empty()) {
        throw std::runtime_error("receding_horizon_policy: solver returned empty plan");
      }
      return plan_.front();
    }
    return plan_[offset];
  }

 private:
  SequenceSolver solver_;
  int replan_every_;
  int solved_at_ = -1;
  std::vector<Vec> plan_;
};

}  // namespace

PolicyFactory receding_horizon_policy(SequenceSolver solver, int replan_every) {
  if (replan_every < 1) {
    throw std::invalid_argument("receding_horizon_policy: replan_every must be >= 1");
  }
  return [solver = std::move(solver), replan_every]() -> std::unique_ptr<StepPolicy> {
    return std::make_unique<RecedingHorizonPolicy>(solver, replan_every);
  };
}

}  // namespace brdp
