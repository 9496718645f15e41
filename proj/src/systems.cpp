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

#include "brdp/systems.hpp"

#include <algorithm>
#include <cmath>

namespace brdp {

// ----- double slit ----- //

std::vector<Rect> SlitGeometry::obstacles() const {
  const double x0 = divider_x - divider_half_thickness;
  const double x1 = divider_x + divider_half_thickness;
  const double narrow_lo = narrow_center - narrow_half_width;
  const double narrow_hi = narrow_center + narrow_half_width;
  const double wide_lo = wide_center - wide_half_width;
  const double wide_hi = wide_center + wide_half_width;
  return {
      // divider pieces below, between, and above the slits
      {x0, x1, 0.0, narrow_lo},
      {x0, x1, narrow_hi, wide_lo},
      {x0, x1, wide_hi, 1.0},
      // boundary walls just outside the unit workspace
      {-0.1, 0.0, -0.1, 1.1},
      {1.0, 1.1, -0.1, 1.1},
      {-0.1, 1.1, -0.1, 0.0},
      {-0.1, 1.1, 1.0, 1.1},
  };
}

Vec SlitGeometry::start() const {
  Vec s(2);
  s << start_x, start_y;
  return s;
}

std::optional<double> segment_rect_entry(const Vec& p, const Vec& q, const Rect& rect) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double los[2] = {rect.xmin, rect.ymin};
  const double his[2] = {rect.xmax, rect.ymax};
  for (int i = 0; i < 2; ++i) {
    const double d = q[i] - p[i];
    if (std::abs(d) < 1e-300) {
      if (p[i] < los[i] || p[i] > his[i]) return std::nullopt;
      continue;
    }
    double a = (los[i] - p[i]) / d;
    double b = (his[i] - p[i]) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

namespace {

struct StepOutcome {
  enum class Kind { free, entered_goal, entered_obstacle, already_absorbed } kind;
  double entry = 1.0;  // segment parameter at absorption
  Vec next;
};

Vec clamp_input(const Vec& u, double bound) {
  Vec c = u;
  for (int i = 0; i < c.size(); ++i) c[i] = std::clamp(c[i], -bound, bound);
  return c;
}

// The absorbing-set semantics: once inside the goal or an obstacle the state
// freezes. A step is resolved by the earliest crossing along its motion
// segment, so passing over a thin wall between two free endpoints still
// collides.
StepOutcome resolve_step(const SlitGeometry& g, const std::vector<Rect>& obstacles,
                         const Vec& x, const Vec& u_clamped) {
  StepOutcome out;
  if (g.goal.contains(x)) {
    out.kind = StepOutcome::Kind::already_absorbed;
    out.next = x;
    return out;
  }
  for (const Rect& r : obstacles) {
    if (r.contains(x)) {
      out.kind = StepOutcome::Kind::already_absorbed;
      out.next = x;
      return out;
    }
  }
  const Vec q = x + u_clamped;
  std::optional<double> s_obs;
  for (const Rect& r : obstacles) {
    const auto s = segment_rect_entry(x, q, r);
    if (s && (!s_obs || *s < *s_obs)) s_obs = s;
  }
  const auto s_goal = segment_rect_entry(x, q, g.goal);
  if (s_goal && (!s_obs || *s_goal < *s_obs)) {
    out.kind = StepOutcome::Kind::entered_goal;
    out.entry = *s_goal;
    out.next = x + *s_goal * u_clamped;
    return out;
  }
  if (s_obs) {
    out.kind = StepOutcome::Kind::entered_obstacle;
    out.entry = *s_obs;
    out.next = x + *s_obs * u_clamped;
    return out;
  }
  out.kind = StepOutcome::Kind::free;
  out.next = q;
  return out;
}

}  // namespace

ControlSystem double_slit_system(const SlitGeometry& geometry) {
  const auto obstacles = geometry.obstacles();
  ControlSystem sys;
  sys.state_dim = 2;
  sys.input_dim = 2;
  sys.horizon = geometry.horizon;
  sys.dynamics = [geometry, obstacles](int, const Vec& x, const Vec& u, Rng*) {
    return resolve_step(geometry, obstacles, x, clamp_input(u, geometry.input_bound)).next;
  };
  sys.stage_cost = [geometry, obstacles](int, const Vec& x, const Vec& u) {
    const Vec uc = clamp_input(u, geometry.input_bound);
    const StepOutcome out = resolve_step(geometry, obstacles, x, uc);
    switch (out.kind) {
      case StepOutcome::Kind::already_absorbed:
        return 0.0;
      case StepOutcome::Kind::entered_goal:
        return out.entry * uc.norm();
      case StepOutcome::Kind::entered_obstacle:
        return kInf;
      case StepOutcome::Kind::free:
        return uc.norm();
    }
    return kInf;
  };
  sys.terminal_cost = [geometry](const Vec& x) {
    return geometry.goal.contains(x) ? 0.0 : kInf;
  };
  sys.sample_initial = [geometry](Rng&) { return geometry.start(); };
  return sys;
}

SlitPassage classify_passage(const Trajectory& traj, const SlitGeometry& geometry) {
  const double dx = geometry.divider_x;
  for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
    const Vec& p = traj.states[t];
    const Vec& q = traj.states[t + 1];
    if ((p[0] < dx && q[0] >= dx) || (q[0] < dx && p[0] >= dx)) {
      const double s = (dx - p[0]) / (q[0] - p[0]);
      const double y = p[1] + s * (q[1] - p[1]);
      if (std::abs(y - geometry.wide_center) <= geometry.wide_half_width) {
        return SlitPassage::wide;
      }
      if (std::abs(y - geometry.narrow_center) <= geometry.narrow_half_width) {
        return SlitPassage::narrow;
      }
    }
  }
  return SlitPassage::none;
}

// ----- quadrotor ----- //

Vec quadrotor_deriv(const QuadrotorParams& p, const Vec& x, const Vec& u) {
  const double theta = x[2];
  const double total = u[0] + u[1];
  Vec dx(6);
  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = -total * std::sin(theta) / p.mass;
  dx[4] = total * std::cos(theta) / p.mass - p.gravity;
  dx[5] = p.arm * (u[0] - u[1]) / p.inertia;
  return dx;
}

void quadrotor_deriv_jacobians(const QuadrotorParams& p, const Vec& x, const Vec& u,
                               Mat& dfdx, Mat& dfdu) {
  const double theta = x[2];
  const double total = u[0] + u[1];
  dfdx = Mat::Zero(6, 6);
  dfdx(0, 3) = 1.0;
  dfdx(1, 4) = 1.0;
  dfdx(2, 5) = 1.0;
  dfdx(3, 2) = -total * std::cos(theta) / p.mass;
  dfdx(4, 2) = -total * std::sin(theta) / p.mass;
  dfdu = Mat::Zero(6, 2);
  dfdu(3, 0) = dfdu(3, 1) = -std::sin(theta) / p.mass;
  dfdu(4, 0) = dfdu(4, 1) = std::cos(theta) / p.mass;
  dfdu(5, 0) = p.arm / p.inertia;
  dfdu(5, 1) = -p.arm / p.inertia;
}

std::function<Vec(const Vec&, const Vec&)> discretize(const DerivFn& f, double dt,
                                                      Discretization method) {
  if (method == Discretization::euler) {
    return [f, dt](const Vec& x, const Vec& u) -> Vec { return x + dt * f(x, u); };
  }
  return [f, dt](const Vec& x, const Vec& u) -> Vec {
    const Vec k1 = f(x, u);
    const Vec k2 = f(x + 0.5 * dt * k1, u);
    const Vec k3 = f(x + 0.5 * dt * k2, u);
    const Vec k4 = f(x + dt * k3, u);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
}

void quadrotor_rk4_step_jacobians(const QuadrotorParams& p, const Vec& x, const Vec& u,
                                  Mat& A, Mat& B) {
  const double dt = p.dt;
  const Mat eye = Mat::Identity(6, 6);
  Mat jx, ju;

  const Vec k1 = quadrotor_deriv(p, x, u);
  quadrotor_deriv_jacobians(p, x, u, jx, ju);
  const Mat dk1_dx = jx;
  const Mat dk1_du = ju;

  const Vec x2 = x + 0.5 * dt * k1;
  const Vec k2 = quadrotor_deriv(p, x2, u);
  quadrotor_deriv_jacobians(p, x2, u, jx, ju);
  const Mat dk2_dx = jx * (eye + 0.5 * dt * dk1_dx);
  const Mat dk2_du = jx * (0.5 * dt * dk1_du) + ju;

  const Vec x3 = x + 0.5 * dt * k2;
  const Vec k3 = quadrotor_deriv(p, x3, u);
  quadrotor_deriv_jacobians(p, x3, u, jx, ju);
  const Mat dk3_dx = jx * (eye + 0.5 * dt * dk2_dx);
  const Mat dk3_du = jx * (0.5 * dt * dk2_du) + ju;

  const Vec x4 = x + dt * k3;
  quadrotor_deriv_jacobians(p, x4, u, jx, ju);
  const Mat dk4_dx = jx * (eye + dt * dk3_dx);
  const Mat dk4_du = jx * (dt * dk3_du) + ju;

  A = eye + dt / 6.0 * (dk1_dx + 2.0 * dk2_dx + 2.0 * dk3_dx + dk4_dx);
  B = dt / 6.0 * (dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du);
}

std::pair<Mat, Mat> linearize_quadrotor(const QuadrotorParams& p) {
  Vec x0 = Vec::Zero(6);
  Vec u0(2);
  u0 << p.hover_thrust(), p.hover_thrust();
  Mat dfdx, dfdu;
  quadrotor_deriv_jacobians(p, x0, u0, dfdx, dfdu);
  return {Mat::Identity(6, 6) + p.dt * dfdx, p.dt * dfdu};
}

Estimator gaussian_estimator(double sigma2, const Vec& v) {
  if (sigma2 < 0.0 || v.minCoeff() < 0.0) {
    throw std::invalid_argument("gaussian_estimator: nonnegative scale required");
  }
  const Vec std_dev = (sigma2 * v.array()).sqrt().matrix();
  const bool noiseless = sigma2 == 0.0;
  std::string desc = "gaussian(sigma2=" + std::to_string(sigma2) + ")";
  return Estimator{
      [std_dev, noiseless](const Vec& x, Rng& rng) -> Vec {
        if (noiseless) return x;
        return x + std_dev.cwiseProduct(rng.gaussian_vector(x.size()));
      },
      desc};
}

Vec quadrotor_noise_shape() {
  Vec v(6);
  v << 0.25, 0.25, 0.1, 0.25, 0.25, 0.1;
  return v;
}

Vec quadrotor_x0_mean() {
  Vec m = Vec::Zero(6);
  m[0] = 1.0;
  m[1] = -1.0;
  return m;
}

Vec quadrotor_x0_variance() {
  Vec v(6);
  v << 1e-2, 1e-2, 1e-6, 1e-4, 1e-4, 1e-8;
  return v;
}

std::function<Vec(Rng&)> quadrotor_initial_distribution() {
  const Vec mean = quadrotor_x0_mean();
  const Vec std_dev = quadrotor_x0_variance().array().sqrt().matrix();
  return [mean, std_dev](Rng& rng) -> Vec {
    return mean + std_dev.cwiseProduct(rng.gaussian_vector(6));
  };
}

ControlSystem linear_quadratic_system(const Mat& A, const Mat& B, const Mat& Q,
                                      const Mat& R, const Mat& Qf, int horizon,
                                      std::function<Vec(Rng&)> sample_initial) {
  ControlSystem sys;
  sys.state_dim = static_cast<int>(A.rows());
  sys.input_dim = static_cast<int>(B.cols());
  sys.horizon = horizon;
  sys.dynamics = [A, B](int, const Vec& x, const Vec& u, Rng*) -> Vec {
    return A * x + B * u;
  };
  sys.stage_cost = [Q, R](int, const Vec& x, const Vec& u) {
    return 0.5 * (x.dot(Q * x) + u.dot(R * u));
  };
  sys.terminal_cost = [Qf](const Vec& x) { return 0.5 * x.dot(Qf * x); };
  sys.sample_initial = std::move(sample_initial);
  return sys;
}

ControlSystem quadrotor_nonlinear_system(const QuadrotorParams& p, const Mat& Q,
                                         const Mat& R, const Mat& Qf,
                                         std::function<Vec(Rng&)> sample_initial) {
  const auto step = discretize(
      [p](const Vec& x, const Vec& u) { return quadrotor_deriv(p, x, u); }, p.dt,
      Discretization::rk4);
  const double hover = p.hover_thrust();
  ControlSystem sys;
  sys.state_dim = 6;
  sys.input_dim = 2;
  sys.horizon = p.horizon;
  sys.dynamics = [step](int, const Vec& x, const Vec& u, Rng*) { return step(x, u); };
  sys.stage_cost = [Q, R, hover](int, const Vec& x, const Vec& u) {
    const Vec du = u.array() - hover;
    return 0.5 * (x.dot(Q * x) + du.dot(R * du));
  };
  sys.terminal_cost = [Qf](const Vec& x) { return 0.5 * x.dot(Qf * x); };
  sys.sample_initial = std::move(sample_initial);
  return sys;
}

}  // namespace brdp
