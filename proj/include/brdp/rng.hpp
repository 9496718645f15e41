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

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace brdp {

// Self-contained xoshiro256++ generator. The standard library distributions
// are implementation-defined, so all sampling goes through this class to keep
// results bit-identical across toolchains and across serial/parallel runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, stream_id). Streams with distinct
  // ids never share state, which is what per-trial / per-channel Monte Carlo
  // relies on.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; the second deviate is cached.
  double gaussian();

  Eigen::VectorXd gaussian_vector(int n);

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> state_;
  double cached_gauss_ = 0.0;
  bool has_cached_gauss_ = false;
};

// Per-trial random channels. Keeping initial-state, estimator, policy, and
// process noise on separate streams preserves common-random-number pairing
// between configurations that consume different amounts of randomness.
struct TrialRngs {
  Rng init;
  Rng estimator;
  Rng policy;
  Rng process;

  static TrialRngs derive(std::uint64_t seed, std::uint64_t trial);
};

}  // namespace brdp
