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

#include "brdp/rng.hpp"

#include <cmath>

namespace brdp {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31u);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) {
    word = splitmix64(s);
  }
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  std::uint64_t t = stream_id ^ 0xd1b54a32d192ed03ull;
  std::uint64_t b = splitmix64(t);
  return Rng(a ^ rotl(b, 17));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_cached_gauss_) {
    has_cached_gauss_ = false;
    return cached_gauss_;
  }
  // Box-Muller; u1 shifted away from zero so log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  u1 = (static_cast<double>(1) - u1) + 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_gauss_ = r * std::sin(kTwoPi * u2);
  has_cached_gauss_ = true;
  return r * std::cos(kTwoPi * u2);
}

Eigen::VectorXd Rng::gaussian_vector(int n) {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = gaussian();
  }
  return out;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling on the top bits to stay unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) {
      return r % n;
    }
  }
}

TrialRngs TrialRngs::derive(std::uint64_t seed, std::uint64_t trial) {
  // Channel ids leave room between trials so streams never collide.
  const std::uint64_t base = trial * 8;
  return TrialRngs{Rng::stream(seed, base + 0), Rng::stream(seed, base + 1),
                   Rng::stream(seed, base + 2), Rng::stream(seed, base + 3)};
}

}  // namespace brdp
