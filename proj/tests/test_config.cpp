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

#include "brdp/config.hpp"

using brdp::Config;
using brdp::ConfigError;

TEST_CASE("parses dotted keys, comments, and typed values") {
  const auto cfg = Config::parse_string(R"(
# comment
experiment = lqg-quadrotor
system.mass = 0.03   # trailing comment
trials = 1000
certify = true
sigma2 = 0, 0.2, 0.4
beta.grid = 0.1:1000:20
)");
  CHECK(cfg.get_string("experiment") == "lqg-quadrotor");
  CHECK(cfg.get_double("system.mass") == doctest::Approx(0.03));
  CHECK(cfg.get_int("trials") == 1000);
  CHECK(cfg.get_bool("certify", false));
  const auto sig = cfg.get_double_list("sigma2");
  REQUIRE(sig.size() == 3);
  CHECK(sig[1] == doctest::Approx(0.2));
  const auto grid = brdp::parse_log_grid(cfg.get_string("beta.grid"));
  REQUIRE(grid.size() == 20);
  CHECK(grid.front() == doctest::Approx(0.1));
  CHECK(grid.back() == doctest::Approx(1000.0));
}

TEST_CASE("inf parses as infinity") {
  const auto cfg = Config::parse_string("beta = inf\n");
  CHECK(std::isinf(cfg.get_double("beta")));
}

TEST_CASE("errors carry context") {
  CHECK_THROWS_AS(Config::parse_string("not a pair\n"), ConfigError);
  const auto cfg = Config::parse_string("x = oops\n");
  CHECK_THROWS_AS(cfg.get_double("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("missing"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("x", true), ConfigError);
}

TEST_CASE("log grid endpoints and spacing") {
  const auto g = brdp::log_spaced(1.0, 100.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[2] == doctest::Approx(100.0));
  CHECK_THROWS_AS(brdp::log_spaced(-1.0, 10.0, 3), ConfigError);
  CHECK_THROWS_AS(brdp::parse_log_grid("junk"), ConfigError);
}
