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

#include "brdp/gibbs.hpp"

#include <algorithm>
#include <cmath>

namespace brdp {

// ----- FiniteGibbs ----- //

FiniteGibbs::FiniteGibbs(std::vector<Vec> inputs, Vec prior_probs, Hamiltonian h,
                         double beta)
    : inputs_(std::move(inputs)), prior_probs_(std::move(prior_probs)), h_(std::move(h)),
      beta_(beta) {
  if (inputs_.empty() || prior_probs_.size() != static_cast<int>(inputs_.size())) {
    throw std::invalid_argument("FiniteGibbs: inputs/prior size mismatch");
  }
  if (beta_ <= 0.0 || !std::isfinite(beta_)) {
    throw std::invalid_argument("FiniteGibbs: beta must be positive and finite");
  }
  if (std::abs(prior_probs_.sum() - 1.0) > 1e-9 || prior_probs_.minCoeff() < 0.0) {
    throw std::invalid_argument("FiniteGibbs: prior is not a probability vector");
  }
  prior_log_probs_ = prior_probs_.array().max(0.0).log().matrix();
}

std::vector<double> FiniteGibbs::log_weights(const Vec& x) const {
  std::vector<double> lw(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    lw[i] = prior_log_probs_[static_cast<int>(i)] - beta_ * h_(x, inputs_[i]);
  }
  return lw;
}

double FiniteGibbs::log_partition(const Vec& x) const {
  const double lz = logsumexp(log_weights(x));
  if (!std::isfinite(lz)) {
    throw DivergingMechanismError("FiniteGibbs: non-finite log partition function");
  }
  return lz;
}

double FiniteGibbs::partition(const Vec& x) const { return std::exp(log_partition(x)); }

Vec FiniteGibbs::densities(const Vec& x) const {
  const auto lw = log_weights(x);
  const double lz = logsumexp(lw);
  if (!std::isfinite(lz)) {
    throw DivergingMechanismError("FiniteGibbs: non-finite log partition function");
  }
  Vec out(n_inputs());
  for (int i = 0; i < n_inputs(); ++i) out[i] = std::exp(lw[i] - lz);
  return out;
}

double FiniteGibbs::density(const Vec& x, int input_index) const {
  return densities(x)[input_index];
}

double FiniteGibbs::log_density(const Vec& x, int input_index) const {
  const auto lw = log_weights(x);
  return lw[input_index] - logsumexp(lw);
}

FreeEnergyReport FiniteGibbs::free_energy(const Vec& x) const {
  FreeEnergyReport r;
  r.state = x;
  const auto lw = log_weights(x);
  r.log_z = logsumexp(lw);
  if (!std::isfinite(r.log_z)) {
    throw DivergingMechanismError("FiniteGibbs: non-finite log partition function");
  }
  r.z = std::exp(r.log_z);
  r.free_energy = -r.log_z / beta_;
  double eh = 0.0;
  double kl = 0.0;
  for (int i = 0; i < n_inputs(); ++i) {
    const double p = std::exp(lw[i] - r.log_z);
    if (p <= 0.0) continue;
    eh += p * h_(x, inputs_[i]);
    kl += p * (std::log(p) - prior_log_probs_[i]);
  }
  r.expected_h = eh;
  r.kl = std::max(0.0, kl);
  return r;
}

double FiniteGibbs::kl_to_prior(const Vec& x) const { return free_energy(x).kl; }

int FiniteGibbs::sample_index(const Vec& x, Rng& rng) const {
  const Vec p = densities(x);
  double u = rng.uniform();
  for (int i = 0; i < n_inputs(); ++i) {
    u -= p[i];
    if (u < 0.0) return i;
  }
  return n_inputs() - 1;
}

std::pair<double, double> FiniteGibbs::variational_check(const Vec& x,
                                                         const Vec& alt_probs) const {
  if (alt_probs.size() != n_inputs()) {
    throw std::invalid_argument("variational_check: alternative pmf size mismatch");
  }
  double eh = 0.0;
  double kl = 0.0;
  for (int i = 0; i < n_inputs(); ++i) {
    const double q = alt_probs[i];
    if (q <= 0.0) continue;
    if (prior_probs_[i] <= 0.0) {
      throw std::invalid_argument(
          "variational_check: alternative not absolutely continuous w.r.t. prior");
    }
    eh += q * h_(x, inputs_[i]);
    kl += q * (std::log(q) - prior_log_probs_[i]);
  }
  return {free_energy(x).free_energy, eh + kl / beta_};
}

// ----- GaussianQuadraticGibbs ----- //

GaussianQuadraticGibbs::GaussianQuadraticGibbs(GaussianDist prior,
                                               QuadraticInputHamiltonian h, double beta)
    : prior_(std::move(prior)), h_(std::move(h)), beta_(beta) {
  if (beta_ <= 0.0 || !std::isfinite(beta_)) {
    throw std::invalid_argument("GaussianQuadraticGibbs: beta must be positive and finite");
  }
  h_.curvature = checked_psd(h_.curvature, "Hamiltonian curvature");
  prior_precision_ = prior_.precision();
  prior_log_det_cov_ = prior_.log_det_cov();
}

GaussianDist GaussianQuadraticGibbs::posterior(const Vec& x) const {
  auto [m, c] = h_.linear_term(x);
  (void)c;
  const Mat precision = prior_precision_ + beta_ * h_.curvature;
  Eigen::LLT<Mat> llt(symmetrized(precision));
  if (llt.info() != Eigen::Success) {
    throw DivergingMechanismError("GaussianQuadraticGibbs: posterior precision not PD");
  }
  const Vec mean = llt.solve(prior_precision_ * prior_.mean() - beta_ * m);
  const Mat cov = llt.solve(Mat::Identity(prior_.dim(), prior_.dim()));
  return GaussianDist(mean, cov);
}

double GaussianQuadraticGibbs::log_partition(const Vec& x) const {
  auto [m, c] = h_.linear_term(x);
  const Mat precision = symmetrized(prior_precision_ + beta_ * h_.curvature);
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw DivergingMechanismError("GaussianQuadraticGibbs: posterior precision not PD");
  }
  const Vec b = prior_precision_ * prior_.mean() - beta_ * m;
  const Vec mu = llt.solve(b);
  const double log_det_precision =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double lz = -beta_ * c - 0.5 * prior_.mean().dot(prior_precision_ * prior_.mean()) +
                    0.5 * b.dot(mu) - 0.5 * prior_log_det_cov_ - 0.5 * log_det_precision;
  if (!std::isfinite(lz)) {
    throw DivergingMechanismError("GaussianQuadraticGibbs: non-finite log partition");
  }
  return lz;
}

double GaussianQuadraticGibbs::partition(const Vec& x) const {
  return std::exp(log_partition(x));
}

double GaussianQuadraticGibbs::log_density(const Vec& x, const Vec& u) const {
  return posterior(x).log_density(u);
}

double GaussianQuadraticGibbs::density(const Vec& x, const Vec& u) const {
  return std::exp(log_density(x, u));
}

double GaussianQuadraticGibbs::expected_h(const Vec& x, const GaussianDist& dist) const {
  auto [m, c] = h_.linear_term(x);
  return 0.5 * ((h_.curvature * dist.cov()).trace() +
                dist.mean().dot(h_.curvature * dist.mean())) +
         m.dot(dist.mean()) + c;
}

FreeEnergyReport GaussianQuadraticGibbs::free_energy(const Vec& x) const {
  FreeEnergyReport r;
  r.state = x;
  r.log_z = log_partition(x);
  r.z = std::exp(r.log_z);
  r.free_energy = -r.log_z / beta_;
  const GaussianDist post = posterior(x);
  r.expected_h = expected_h(x, post);
  r.kl = std::max(0.0, gaussian_kl(post, prior_));
  return r;
}

double GaussianQuadraticGibbs::kl_to_prior(const Vec& x) const {
  return std::max(0.0, gaussian_kl(posterior(x), prior_));
}

std::pair<double, double> GaussianQuadraticGibbs::variational_check(
    const Vec& x, const GaussianDist& alternative) const {
  const double rhs = expected_h(x, alternative) + gaussian_kl(alternative, prior_) / beta_;
  return {-log_partition(x) / beta_, rhs};
}

// ----- MonteCarloGibbs ----- //

MonteCarloGibbs::MonteCarloGibbs(std::function<Vec(Rng&)> prior_sampler, Hamiltonian h,
                                 double beta, int n_samples)
    : prior_sampler_(std::move(prior_sampler)), h_(std::move(h)), beta_(beta),
      n_samples_(n_samples) {
  if (beta_ <= 0.0 || !std::isfinite(beta_)) {
    throw std::invalid_argument("MonteCarloGibbs: beta must be positive and finite");
  }
  if (n_samples_ < 2) {
    throw std::invalid_argument("MonteCarloGibbs: n_samples must be >= 2");
  }
}

MonteCarloGibbs::Weighted MonteCarloGibbs::weighted_draws(const Vec& x, Rng& rng) const {
  Weighted w;
  w.draws.reserve(n_samples_);
  w.log_w.resize(n_samples_);
  for (int i = 0; i < n_samples_; ++i) {
    w.draws.push_back(prior_sampler_(rng));
    w.log_w[i] = -beta_ * h_(x, w.draws.back());
  }
  w.log_sum = logsumexp(w.log_w);
  if (!std::isfinite(w.log_sum)) {
    throw DivergingMechanismError("MonteCarloGibbs: non-finite weight sum");
  }
  w.norm_w.resize(n_samples_);
  for (int i = 0; i < n_samples_; ++i) w.norm_w[i] = std::exp(w.log_w[i] - w.log_sum);
  return w;
}

MonteCarloGibbs::ZEstimate MonteCarloGibbs::log_partition(const Vec& x, Rng& rng) const {
  const Weighted w = weighted_draws(x, rng);
  double sum_w2 = 0.0;
  for (double v : w.norm_w) sum_w2 += v * v;
  ZEstimate z;
  z.n_samples = n_samples_;
  z.log_z = w.log_sum - std::log(static_cast<double>(n_samples_));
  z.ess = 1.0 / sum_w2;
  if (z.ess < 10.0) {
    throw UnreliableEstimateError("MonteCarloGibbs: effective sample size " +
                                  std::to_string(z.ess) + " < 10");
  }
  // Relative SE of Z-hat, the mean of y_i = exp(-beta H_i).
  const double n = static_cast<double>(n_samples_);
  z.rel_std_error = std::sqrt(std::max(0.0, sum_w2 - 1.0 / n) * n / (n - 1.0));
  return z;
}

FreeEnergyReport MonteCarloGibbs::free_energy(const Vec& x, Rng& rng) const {
  const Weighted w = weighted_draws(x, rng);
  double sum_w2 = 0.0;
  for (double v : w.norm_w) sum_w2 += v * v;
  if (1.0 / sum_w2 < 10.0) {
    throw UnreliableEstimateError("MonteCarloGibbs: effective sample size too small");
  }
  FreeEnergyReport r;
  r.state = x;
  r.log_z = w.log_sum - std::log(static_cast<double>(n_samples_));
  r.z = std::exp(r.log_z);
  r.free_energy = -r.log_z / beta_;
  double eh = 0.0;
  for (int i = 0; i < n_samples_; ++i) eh += w.norm_w[i] * (-w.log_w[i] / beta_);
  r.expected_h = eh;
  // KL = -beta E[H] - log Z under the mechanism's own draws.
  r.kl = std::max(0.0, -beta_ * eh - r.log_z);
  double var_eh = 0.0;
  for (int i = 0; i < n_samples_; ++i) {
    const double hi = -w.log_w[i] / beta_;
    var_eh += w.norm_w[i] * w.norm_w[i] * (hi - eh) * (hi - eh);
  }
  const double n = static_cast<double>(n_samples_);
  const double se_logz = std::sqrt(std::max(0.0, sum_w2 - 1.0 / n) * n / (n - 1.0));
  r.estimate_tolerance = beta_ * std::sqrt(var_eh) + se_logz;
  return r;
}

Vec MonteCarloGibbs::sample(const Vec& x, Rng& rng) const {
  const Weighted w = weighted_draws(x, rng);
  double u = rng.uniform();
  for (int i = 0; i < n_samples_; ++i) {
    u -= w.norm_w[i];
    if (u < 0.0) return w.draws[i];
  }
  return w.draws.back();
}

}  // namespace brdp
