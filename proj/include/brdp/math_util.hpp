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

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "brdp/rng.hpp"

namespace brdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Validates symmetric positive (semi)definiteness the way the solvers expect:
// minimum eigenvalue >= -1e-10, then symmetrize.
inline Mat checked_psd(const Mat& m, const std::string& name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(name + " must be square");
  }
  const Mat sym = symmetrized(m);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(name + " is not positive semidefinite (min eig " +
                                std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return sym;
}

inline double logsumexp(std::span<const double> values) {
  double m = -kInf;
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // all -inf, or a +inf present
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

// N(mean, cov) with a cached Cholesky factor; covariance must be positive
// definite.
class GaussianDist {
 public:
  GaussianDist() = default;
  GaussianDist(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(symmetrized(cov)) {
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) {
      throw std::invalid_argument("GaussianDist: covariance not positive definite");
    }
    log_det_cov_ = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  const Vec& mean() const { return mean_; }
  const Mat& cov() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  double log_det_cov() const { return log_det_cov_; }

  Vec sample(Rng& rng) const {
    return mean_ + llt_.matrixL() * rng.gaussian_vector(dim());
  }

  // x = mean + L w for standard-normal w.
  Vec from_whitened(const Vec& w) const { return mean_ + llt_.matrixL() * w; }
  Vec to_whitened(const Vec& x) const {
    return llt_.matrixL().solve(x - mean_);
  }
  // L^T g, the chain-rule factor for gradients of f(from_whitened(w)).
  Vec whiten_gradient(const Vec& g) const {
    return llt_.matrixL().transpose() * g;
  }

  double log_density(const Vec& x) const {
    const Vec w = llt_.matrixL().solve(x - mean_);
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    return -0.5 * (w.squaredNorm() + log_det_cov_ + dim() * kLog2Pi);
  }

  Mat precision() const {
    return llt_.solve(Mat::Identity(dim(), dim()));
  }

 private:
  Vec mean_;
  Mat cov_;
  Eigen::LLT<Mat> llt_;
  double log_det_cov_ = 0.0;
};

// KL(N(mean1,cov1) || N(mean0,cov0)), closed form.
inline double gaussian_kl(const GaussianDist& p, const GaussianDist& q) {
  const int n = p.dim();
  Eigen::LLT<Mat> llt0(q.cov());
  if (llt0.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian_kl: reference covariance not positive definite");
  }
  const Mat cov_ratio = llt0.solve(p.cov());
  const Vec dm = q.mean() - p.mean();
  const double maha = dm.dot(llt0.solve(dm));
  return 0.5 * (cov_ratio.trace() + maha - n + q.log_det_cov() - p.log_det_cov());
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace brdp
