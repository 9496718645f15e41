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

#include <doctest.h>

#include <cmath>

#include "brdp/core.hpp"
#include "brdp/systems.hpp"

namespace {

using namespace brdp;

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

class SequencePolicy : public StepPolicy {
 public:
  explicit SequencePolicy(std::vector<Vec> seq) : seq_(std::move(seq)) {}
  Vec sample(int t, const Vec&, Rng&) override {
    return t < static_cast<int>(seq_.size()) ? seq_[t] : Vec(Vec::Zero(2));
  }

 private:
  std::vector<Vec> seq_;
};

}  // namespace

TEST_CASE("segment-rectangle entry parameters") {
  const Rect r{0.4, 0.6, 0.0, 1.0};
  CHECK(segment_rect_entry(vec2(0.0, 0.5), vec2(1.0, 0.5), r) == doctest::Approx(0.4));
  CHECK_FALSE(segment_rect_entry(vec2(0.0, 2.0), vec2(1.0, 2.0), r).has_value());
  // starting inside enters at zero
  CHECK(segment_rect_entry(vec2(0.5, 0.5), vec2(1.0, 0.5), r) == doctest::Approx(0.0));
  // degenerate (axis-parallel zero motion) outside
  CHECK_FALSE(segment_rect_entry(vec2(0.2, 0.5), vec2(0.2, 0.6), r).has_value());
}

TEST_CASE("double-slit costs and absorption") {
  SlitGeometry g;
  g.horizon = 6;
  g.input_bound = 0.5;  // allow long test strides
  // put the goal straight ahead of the start for an unobstructed run
  g.start_x = 0.55;
  g.start_y = 0.15;
  g.goal = Rect{0.85, 0.95, 0.1, 0.2};
  const auto sys = double_slit_system(g);

  SUBCASE("straight free-space path costs its Euclidean length") {
    // 0.1-long strides toward the goal; enters the goal box at x = 0.85
    std::vector<Vec> seq(6, vec2(0.1, 0.0));
    SequencePolicy policy(seq);
    TrialRngs rngs = TrialRngs::derive(0, 0);
    const auto traj = rollout(sys, policy, exact_estimator(), rngs);
    CHECK(traj.total_cost == doctest::Approx(0.30));  // 0.85 - 0.55
    // absorbed: once inside, later steps add nothing and the state freezes
    CHECK((traj.states[5] - traj.states[4]).norm() == 0.0);
  }

  SUBCASE("crossing the divider between slits kills even with free endpoints") {
    SlitGeometry w;
    w.horizon = 2;
    w.input_bound = 0.5;
    w.start_x = 0.40;
    w.start_y = 0.5;  // between the slits in height
    const auto wall = double_slit_system(w);
    // one long stride over the thin divider
    std::vector<Vec> seq(2, vec2(0.3, 0.0));
    SequencePolicy policy(seq);
    TrialRngs rngs = TrialRngs::derive(0, 0);
    const auto traj = rollout(wall, policy, exact_estimator(), rngs);
    CHECK(std::isinf(traj.total_cost));
  }

  SUBCASE("running out the clock without reaching the goal is a failure") {
    std::vector<Vec> seq(6, vec2(0.0, 0.0));
    SequencePolicy policy(seq);
    TrialRngs rngs = TrialRngs::derive(0, 0);
    CHECK(std::isinf(rollout(sys, policy, exact_estimator(), rngs).total_cost));
  }
}

TEST_CASE("passage classification picks the crossed slit") {
  SlitGeometry g;
  g.horizon = 3;
  g.input_bound = 0.5;
  g.start_x = 0.3;
  g.start_y = 0.7;  // aligned with the wide slit
  const auto sys = double_slit_system(g);
  std::vector<Vec> seq(3, vec2(0.3, 0.0));
  SequencePolicy policy(seq);
  TrialRngs rngs = TrialRngs::derive(0, 0);
  const auto traj = rollout(sys, policy, exact_estimator(), rngs);
  CHECK(classify_passage(traj, g) == SlitPassage::wide);
}

TEST_CASE("quadrotor continuous dynamics") {
  const QuadrotorParams p;
  const Vec x0 = Vec::Zero(6);
  Vec hover(2);
  hover << p.hover_thrust(), p.hover_thrust();

  SUBCASE("hover equilibrium") {
    CHECK(quadrotor_deriv(p, x0, hover).norm() == doctest::Approx(0.0));
  }
  SUBCASE("level thrust balances gravity") {
    Vec u(2);
    u << 0.6 * p.mass * p.gravity, 0.4 * p.mass * p.gravity;  // total = mg
    const Vec dx = quadrotor_deriv(p, x0, u);
    CHECK(dx[3] == doctest::Approx(0.0));
    CHECK(dx[4] == doctest::Approx(0.0));
    CHECK(dx[5] == doctest::Approx(p.arm * (u[0] - u[1]) / p.inertia));
  }
}

TEST_CASE("discretization schemes on a scalar linear field") {
  const double a = -0.7, dt = 0.25;
  const DerivFn f = [a](const Vec& x, const Vec&) -> Vec { return a * x; };
  const Vec x0 = Vec::Constant(1, 2.0);
  const Vec u = Vec::Zero(1);
  const auto euler = discretize(f, dt, Discretization::euler);
  CHECK(euler(x0, u)[0] == doctest::Approx(2.0 * (1 + a * dt)).epsilon(1e-15));
  const auto rk4 = discretize(f, dt, Discretization::rk4);
  const double z = a * dt;
  const double truncated_exp = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
  CHECK(rk4(x0, u)[0] == doctest::Approx(2.0 * truncated_exp).epsilon(1e-15));
}

TEST_CASE("rk4 equals euler at the hover fixed point") {
  const QuadrotorParams p;
  const DerivFn f = [&p](const Vec& x, const Vec& u) { return quadrotor_deriv(p, x, u); };
  Vec hover(2);
  hover << p.hover_thrust(), p.hover_thrust();
  const Vec x0 = Vec::Zero(6);
  CHECK((discretize(f, p.dt, Discretization::rk4)(x0, hover) -
         discretize(f, p.dt, Discretization::euler)(x0, hover))
            .norm() == doctest::Approx(0.0));
}

TEST_CASE("hover linearization structure and finite-difference agreement") {
  const QuadrotorParams p;
  const auto [A, B] = linearize_quadrotor(p);
  // kinematic rows couple position to velocity with coefficient dt
  for (int i = 0; i < 3; ++i) {
    CHECK(A(i, i + 3) == doctest::Approx(p.dt));
  }
  // vertical acceleration row responds with dt/m = 10 to both inputs
  CHECK(B(4, 0) == doctest::Approx(p.dt / p.mass));
  CHECK(B(4, 1) == doctest::Approx(10.0));

  // central differences on the continuous field
  Vec hover(2);
  hover << p.hover_thrust(), p.hover_thrust();
  const Vec x0 = Vec::Zero(6);
  const double h = 1e-6;
  for (int j = 0; j < 6; ++j) {
    Vec xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    const Vec col = (quadrotor_deriv(p, xp, hover) - quadrotor_deriv(p, xm, hover)) / (2 * h);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(A(i, j) - ((i == j ? 1.0 : 0.0) + p.dt * col[i])) < 1e-6);
    }
  }
  for (int j = 0; j < 2; ++j) {
    Vec up = hover, um = hover;
    up[j] += h;
    um[j] -= h;
    const Vec col = (quadrotor_deriv(p, x0, up) - quadrotor_deriv(p, x0, um)) / (2 * h);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(B(i, j) - p.dt * col[i]) < 1e-6 * std::max(1.0, std::abs(B(i, j))));
    }
  }
}

TEST_CASE("rk4 step jacobians match finite differences") {
  const QuadrotorParams p;
  Vec x(6);
  x << 0.4, -0.2, 0.05, 0.1, -0.3, 0.2;
  Vec u(2);
  u << 0.16, 0.13;
  Mat A, B;
  quadrotor_rk4_step_jacobians(p, x, u, A, B);
  const DerivFn f = [&p](const Vec& xs, const Vec& us) { return quadrotor_deriv(p, xs, us); };
  const auto step = discretize(f, p.dt, Discretization::rk4);
  const double h = 1e-6;
  for (int j = 0; j < 6; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec col = (step(xp, u) - step(xm, u)) / (2 * h);
    CHECK((A.col(j) - col).norm() < 2e-5 * std::max(1.0, col.norm()));
  }
  for (int j = 0; j < 2; ++j) {
    Vec up = u, um = u;
    up[j] += h;
    um[j] -= h;
    const Vec col = (step(x, up) - step(x, um)) / (2 * h);
    CHECK((B.col(j) - col).norm() < 2e-5 * std::max(1.0, col.norm()));
  }
}

TEST_CASE("gaussian estimator moments") {
  Rng rng(31);
  SUBCASE("zero scale is exact") {
    const auto est = gaussian_estimator(0.0, quadrotor_noise_shape());
    const Vec x = quadrotor_x0_mean();
    CHECK((est.sample(x, rng) - x).norm() == 0.0);
  }
  SUBCASE("sample covariance matches sigma2 * v") {
    const double sigma2 = 0.4;
    const Vec v = quadrotor_noise_shape();
    const auto est = gaussian_estimator(sigma2, v);
    const Vec x = Vec::Zero(6);
    const int n = 100000;
    Vec ss = Vec::Zero(6);
    for (int i = 0; i < n; ++i) {
      const Vec e = est.sample(x, rng);
      ss += e.cwiseProduct(e);
    }
    for (int i = 0; i < 6; ++i) {
      const double var = ss[i] / n;
      CHECK(std::abs(var - sigma2 * v[i]) < 0.05 * sigma2 * v[i]);
    }
    // the damped coordinates really have less noise
    CHECK(ss[2] < ss[0]);
    CHECK(ss[5] < ss[3]);
  }
}

TEST_CASE("initial distribution moments") {
  auto sampler = quadrotor_initial_distribution();
  Rng rng(41);
  const int n = 100000;
  Vec sum = Vec::Zero(6), ss = Vec::Zero(6);
  for (int i = 0; i < n; ++i) {
    const Vec x = sampler(rng);
    sum += x;
    ss += x.cwiseProduct(x);
  }
  const Vec mean = sum / n;
  const Vec expect_mean = quadrotor_x0_mean();
  const Vec var = ss / n - mean.cwiseProduct(mean);
  const Vec expect_var = quadrotor_x0_variance();
  for (int i = 0; i < 6; ++i) {
    const double se = std::sqrt(expect_var[i] / n);
    CHECK(std::abs(mean[i] - expect_mean[i]) < 3.5 * se);
    CHECK(std::abs(var[i] - expect_var[i]) < 0.05 * expect_var[i]);
  }
}

TEST_CASE("nonlinear rollout from exact hover stays at hover") {
  const QuadrotorParams p;
  const auto sys = quadrotor_nonlinear_system(p, Mat::Identity(6, 6),
                                              0.1 * Mat::Identity(2, 2), Mat::Identity(6, 6),
                                              [](Rng&) { return Vec(Vec::Zero(6)); });
  Vec hover(2);
  hover << p.hover_thrust(), p.hover_thrust();
  auto policy = make_policy_factory([hover](int, const Vec&, Rng&) { return hover; })();
  TrialRngs rngs = TrialRngs::derive(0, 0);
  const auto traj = rollout(sys, *policy, exact_estimator(), rngs);
  for (const auto& x : traj.states) {
    CHECK(x.norm() <= 1e-12);
  }
}

TEST_CASE("one linearized step agrees with the nonlinear step to second order") {
  const QuadrotorParams p;
  // the same integrator on the linearized field isolates the linearization error
  const auto [Ac_check, Bc_check] = linearize_quadrotor(p);
  Mat Ac = (Ac_check - Mat::Identity(6, 6)) / p.dt;
  Mat Bc = Bc_check / p.dt;
  Vec hover(2);
  hover << p.hover_thrust(), p.hover_thrust();
  const DerivFn f_nl = [&p](const Vec& x, const Vec& u) { return quadrotor_deriv(p, x, u); };
  const DerivFn f_lin = [Ac, Bc, hover](const Vec& x, const Vec& u) -> Vec {
    return Ac * x + Bc * (u - hover);
  };
  const auto step_nl = discretize(f_nl, p.dt, Discretization::rk4);
  const auto step_lin = discretize(f_lin, p.dt, Discretization::rk4);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const double delta = 1e-3 * (0.1 + 0.9 * rng.uniform());
    Vec dx = rng.gaussian_vector(6);
    dx *= delta / dx.norm();
    const Vec a = step_nl(dx, hover);
    const Vec b = step_lin(dx, hover);
    CHECK((a - b).norm() <= 10.0 * delta * delta);
  }
}
