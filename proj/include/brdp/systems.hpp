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

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "brdp/core.hpp"
#include "brdp/math_util.hpp"

namespace brdp {

// ----- double-slit motion planning world ----- //

struct Rect {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  bool contains(const Vec& p) const {
    return p[0] >= xmin && p[0] <= xmax && p[1] >= ymin && p[1] <= ymax;
  }
};

// Unit workspace with boundary walls and a vertical divider punctured by a
// wide and a narrow slit; the goal box sits in the lower right. Both the
// obstacle set and the goal are absorbing. All values are artifact defaults
// (the reference only depicts the scene), overridable through the config.
struct SlitGeometry {
  double divider_x = 0.5;
  double divider_half_thickness = 0.01;
  double wide_center = 0.7;
  double wide_half_width = 0.08;
  double narrow_center = 0.35;
  double narrow_half_width = 0.02;
  Rect goal{0.85, 0.95, 0.1, 0.2};
  double start_x = 0.1;
  double start_y = 0.5;
  int horizon = 40;
  double input_bound = 0.15;     // per-coordinate clamp on u
  double prior_std = 0.12;       // zero-mean Gaussian prior, per step per axis

  // Divider pieces plus boundary walls, axis-aligned rectangles only.
  std::vector<Rect> obstacles() const;
  Vec start() const;
};

// Earliest parameter s in [0,1] at which the segment p -> q is inside `rect`,
// or nullopt if the segment misses it (slab method; closed rectangle).
std::optional<double> segment_rect_entry(const Vec& p, const Vec& q, const Rect& rect);

// Single-integrator planner system: x_{t+1} = x_t + clamp(u_t); stage cost is
// the path length actually travelled, collision latches the +inf sentinel on
// the crossing step (segment test, not endpoint test), and the terminal cost
// is 0 inside the goal and +inf otherwise.
ControlSystem double_slit_system(const SlitGeometry& geometry);

enum class SlitPassage { none, wide, narrow };

// Which slit a trajectory's divider crossing went through.
SlitPassage classify_passage(const Trajectory& traj, const SlitGeometry& geometry);

// ----- planar quadrotor ----- //

struct QuadrotorParams {
  double mass = 0.03;        // kg
  double inertia = 1.43e-5;  // kg m^2
  double gravity = 9.81;     // m/s^2
  double arm = 0.046;        // m, rotor arm; not given by the reference setup
  double dt = 0.3;           // s
  int horizon = 13;

  double hover_thrust() const { return mass * gravity / 2.0; }  // per rotor pair
};

// State (y, z, theta, ydot, zdot, thetadot); inputs are the two rotor-pair
// thrusts in newtons. Returns the continuous-time derivative.
Vec quadrotor_deriv(const QuadrotorParams& p, const Vec& x, const Vec& u);

// Jacobians of quadrotor_deriv.
void quadrotor_deriv_jacobians(const QuadrotorParams& p, const Vec& x, const Vec& u,
                               Mat& dfdx, Mat& dfdu);

enum class Discretization { euler, rk4 };

using DerivFn = std::function<Vec(const Vec& x, const Vec& u)>;

// Single-step map for xdot = f(x, u) under the chosen scheme.
std::function<Vec(const Vec&, const Vec&)> discretize(const DerivFn& f, double dt,
                                                      Discretization method);

// Jacobians of one RK4 step of the quadrotor, chained through the stages.
void quadrotor_rk4_step_jacobians(const QuadrotorParams& p, const Vec& x, const Vec& u,
                                  Mat& A, Mat& B);

// Euler discretization of the hover-point linearization:
// A = I + dt df/dx, B = dt df/du evaluated at x = 0, u = hover.
std::pair<Mat, Mat> linearize_quadrotor(const QuadrotorParams& p);

// x_hat = x + eps, eps ~ N(0, diag(sigma2 * v)).
Estimator gaussian_estimator(double sigma2, const Vec& v);

// Per-coordinate estimation-noise shape used by the quadrotor experiments.
Vec quadrotor_noise_shape();

// Initial condition N(x0_mean, diag(x0_var)) with y = 1 m, z = -1 m offsets.
Vec quadrotor_x0_mean();
Vec quadrotor_x0_variance();
std::function<Vec(Rng&)> quadrotor_initial_distribution();

// Linear system in hover-deviation coordinates with the 1/2-convention LQR
// cost; states and inputs are deviations, matching LqgProblem.
ControlSystem linear_quadratic_system(const Mat& A, const Mat& B, const Mat& Q,
                                      const Mat& R, const Mat& Qf, int horizon,
                                      std::function<Vec(Rng&)> sample_initial);

// Nonlinear quadrotor simulation (RK4): absolute thrust inputs, cost
// 1/2 (xᵀQx + (u - u_hover)ᵀR(u - u_hover)), terminal 1/2 xᵀQ_f x.
ControlSystem quadrotor_nonlinear_system(const QuadrotorParams& p, const Mat& Q,
                                         const Mat& R, const Mat& Qf,
                                         std::function<Vec(Rng&)> sample_initial);

}  // namespace brdp
