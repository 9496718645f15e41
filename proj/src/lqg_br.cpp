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

#include "brdp/lqg_br.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace brdp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double condition_estimate(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(m), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return kInf;
  return hi / lo;
}

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (int j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Vec vector_from_json(const nlohmann::json& j) {
  Vec v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void LqgProblem::validate() {
  const int n = state_dim();
  const int m = input_dim();
  if (A.rows() != n || A.cols() != n || B.rows() != n) {
    throw std::invalid_argument("LqgProblem: A/B dimension mismatch");
  }
  if (horizon < 1) throw std::invalid_argument("LqgProblem: horizon must be positive");
  Q = checked_psd(Q, "Q");
  R = checked_psd(R, "R");
  Qf = checked_psd(Qf, "Qf");
  if (Q.rows() != n || Qf.rows() != n || R.rows() != m) {
    throw std::invalid_argument("LqgProblem: cost dimension mismatch");
  }
  if (!process_noise_cov.empty() &&
      static_cast<int>(process_noise_cov.size()) != horizon) {
    throw std::invalid_argument("LqgProblem: process noise covariance count mismatch");
  }
  for (auto& cov : process_noise_cov) cov = checked_psd(cov, "process noise covariance");
  if (static_cast<int>(prior.size()) != horizon) {
    throw std::invalid_argument("LqgProblem: need one prior per step");
  }
  for (const auto& p : prior) {
    if (p.dim() != m) throw std::invalid_argument("LqgProblem: prior dimension mismatch");
  }
}

Vec BrLqgPolicy::sample(int t, const Vec& x, Rng& rng) const {
  return mean_input(t, x) + eta_cov_chol[t] * rng.gaussian_vector(eta_mean[t].size());
}

double BrLqgPolicy::log_density(int t, const Vec& x, const Vec& u) const {
  const Vec w = eta_cov_chol[t].triangularView<Eigen::Lower>().solve(u - mean_input(t, x));
  return -0.5 * (w.squaredNorm() + eta_cov_log_det[t] +
                 eta_mean[t].size() * kLog2Pi);
}

double BrLqgPolicy::value(const Vec& x0) const {
  return 0.5 * x0.dot(P[0] * x0) + b[0].dot(x0) + d[0];
}

BrLqgPolicy solve_br_lqg(const LqgProblem& problem, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("solve_br_lqg: beta must lie in (0, inf)");
  }
  const int tf = problem.horizon;
  const int n = problem.state_dim();
  const int m = problem.input_dim();

  BrLqgPolicy pol;
  pol.beta = beta;
  pol.K.resize(tf);
  pol.eta_mean.resize(tf);
  pol.eta_cov.resize(tf);
  pol.eta_cov_chol.resize(tf);
  pol.eta_cov_log_det.resize(tf);
  pol.P.assign(tf + 1, Mat::Zero(n, n));
  pol.b.assign(tf + 1, Vec::Zero(n));
  pol.d.assign(tf + 1, 0.0);
  pol.P[tf] = problem.Qf;

  for (int t = tf - 1; t >= 0; --t) {
    const Mat& Pn = pol.P[t + 1];
    const Vec& bn = pol.b[t + 1];
    const Mat gram = symmetrized(problem.B.transpose() * Pn * problem.B + problem.R);
    const Mat prior_precision = problem.prior[t].precision();
    const Mat precision = symmetrized(beta * gram + prior_precision);
    Eigen::LLT<Mat> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedProblemError("solve_br_lqg: singular input precision at step " +
                                           std::to_string(t),
                                       condition_estimate(precision));
    }
    const Mat K = -llt.solve(beta * problem.B.transpose() * Pn * problem.A);
    const Vec eta_mean = llt.solve(prior_precision * problem.prior[t].mean() -
                                   beta * problem.B.transpose() * bn);
    const Mat eta_cov = symmetrized(llt.solve(Mat::Identity(m, m)));

    const Mat a_cl = problem.A + problem.B * K;
    const Mat P = symmetrized(problem.Q + K.transpose() * problem.R * K +
                              a_cl.transpose() * Pn * a_cl);
    const Vec b = K.transpose() * (problem.R * eta_mean) +
                  a_cl.transpose() * (Pn * (problem.B * eta_mean) + bn);
    double d = pol.d[t + 1] + 0.5 * eta_mean.dot(gram * eta_mean) +
               bn.dot(problem.B * eta_mean) + 0.5 * (eta_cov * gram).trace();
    if (!problem.process_noise_cov.empty()) {
      d += 0.5 * (problem.process_noise_cov[t] * Pn).trace();
    }

    pol.K[t] = K;
    pol.eta_mean[t] = eta_mean;
    pol.eta_cov[t] = eta_cov;
    Eigen::LLT<Mat> cov_llt(eta_cov);
    if (cov_llt.info() != Eigen::Success) {
      throw IllConditionedProblemError("solve_br_lqg: input covariance not PD at step " +
                                           std::to_string(t),
                                       condition_estimate(precision));
    }
    pol.eta_cov_chol[t] = cov_llt.matrixL();
    pol.eta_cov_log_det[t] =
        2.0 * pol.eta_cov_chol[t].diagonal().array().log().sum();
    pol.P[t] = P;
    pol.b[t] = b;
    pol.d[t] = d;
  }
  return pol;
}

std::vector<Mat> lqr_reference(const LqgProblem& problem) {
  const int tf = problem.horizon;
  std::vector<Mat> gains(tf);
  Mat P = problem.Qf;
  for (int t = tf - 1; t >= 0; --t) {
    const Mat gram = symmetrized(problem.B.transpose() * P * problem.B + problem.R);
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedProblemError("lqr_reference: singular BᵀPB + R at step " +
                                           std::to_string(t),
                                       condition_estimate(gram));
    }
    const Mat S = problem.B.transpose() * P * problem.A;
    const Mat K = -llt.solve(S);
    gains[t] = K;
    P = symmetrized(problem.Q + problem.A.transpose() * P * problem.A +
                    S.transpose() * K);
  }
  return gains;
}

double stepwise_kl(const BrLqgPolicy& policy, const LqgProblem& problem, const Vec& x,
                   int t) {
  const GaussianDist step_law(policy.mean_input(t, x), policy.eta_cov[t]);
  return std::max(0.0, gaussian_kl(step_law, problem.prior[t]));
}

std::vector<GaussianDist> project_prior_through_lqr(const LqgProblem& problem_sans_prior,
                                                    const Vec& x0_mean, const Mat& x0_cov,
                                                    double ridge) {
  LqgProblem scratch = problem_sans_prior;
  // Riccati needs no prior; give validate a placeholder.
  scratch.prior.assign(scratch.horizon,
                       GaussianDist(Vec::Zero(scratch.input_dim()),
                                    Mat::Identity(scratch.input_dim(), scratch.input_dim())));
  scratch.validate();
  const std::vector<Mat> gains = lqr_reference(scratch);

  std::vector<GaussianDist> prior;
  prior.reserve(scratch.horizon);
  Vec mean = x0_mean;
  Mat cov = symmetrized(x0_cov);
  const Mat ridge_eye = ridge * Mat::Identity(scratch.input_dim(), scratch.input_dim());
  for (int t = 0; t < scratch.horizon; ++t) {
    prior.emplace_back(gains[t] * mean,
                       symmetrized(gains[t] * cov * gains[t].transpose()) + ridge_eye);
    const Mat a_cl = scratch.A + scratch.B * gains[t];
    mean = a_cl * mean;
    cov = symmetrized(a_cl * cov * a_cl.transpose());
  }
  return prior;
}

PolicyFactory br_lqg_policy_factory(const BrLqgPolicy& policy) {
  return make_policy_factory([&policy](int t, const Vec& x, Rng& rng) {
    return policy.sample(t, x, rng);
  });
}

PolicyFactory lqr_policy_factory(const std::vector<Mat>& gains) {
  return make_policy_factory(
      [&gains](int t, const Vec& x, Rng&) -> Vec { return gains[t] * x; });
}

PolicyFactory prior_policy_factory(const std::vector<GaussianDist>& prior) {
  return make_policy_factory(
      [&prior](int t, const Vec&, Rng& rng) { return prior[t].sample(rng); });
}

nlohmann::json policy_to_json(const BrLqgPolicy& policy) {
  nlohmann::json j;
  j["beta"] = policy.beta;
  j["K"] = nlohmann::json::array();
  j["eta_mean"] = nlohmann::json::array();
  j["eta_cov"] = nlohmann::json::array();
  j["P"] = nlohmann::json::array();
  j["b"] = nlohmann::json::array();
  j["d"] = policy.d;
  for (int t = 0; t < policy.horizon(); ++t) {
    j["K"].push_back(matrix_to_json(policy.K[t]));
    j["eta_mean"].push_back(std::vector<double>(
        policy.eta_mean[t].data(), policy.eta_mean[t].data() + policy.eta_mean[t].size()));
    j["eta_cov"].push_back(matrix_to_json(policy.eta_cov[t]));
  }
  for (const Mat& p : policy.P) j["P"].push_back(matrix_to_json(p));
  for (const Vec& bv : policy.b) {
    j["b"].push_back(std::vector<double>(bv.data(), bv.data() + bv.size()));
  }
  return j;
}

BrLqgPolicy policy_from_json(const nlohmann::json& j) {
  BrLqgPolicy pol;
  pol.beta = j.at("beta").get<double>();
  const int tf = static_cast<int>(j.at("K").size());
  pol.K.resize(tf);
  pol.eta_mean.resize(tf);
  pol.eta_cov.resize(tf);
  pol.eta_cov_chol.resize(tf);
  pol.eta_cov_log_det.resize(tf);
  for (int t = 0; t < tf; ++t) {
    pol.K[t] = matrix_from_json(j.at("K")[t]);
    pol.eta_mean[t] = vector_from_json(j.at("eta_mean")[t]);
    pol.eta_cov[t] = matrix_from_json(j.at("eta_cov")[t]);
    Eigen::LLT<Mat> llt(pol.eta_cov[t]);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("policy_from_json: eta_cov not positive definite");
    }
    pol.eta_cov_chol[t] = llt.matrixL();
    pol.eta_cov_log_det[t] = 2.0 * pol.eta_cov_chol[t].diagonal().array().log().sum();
  }
  for (const auto& p : j.at("P")) pol.P.push_back(matrix_from_json(p));
  for (const auto& bv : j.at("b")) pol.b.push_back(vector_from_json(bv));
  pol.d = j.at("d").get<std::vector<double>>();
  return pol;
}

}  // namespace brdp
