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

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace brdp {

// Runs fn(i) for i in [0, n). Work items write to index-addressed slots, so
// the result is identical for any thread count; aggregation stays with the
// caller in index order.
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  const int k = std::min(n_threads, n);
  for (int w = 0; w < k; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += k) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

// Thread count resolution: BRDP_THREADS env var overrides the requested value.
inline int resolve_threads(int requested) {
  if (const char* env = std::getenv("BRDP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return requested >= 1 ? requested : 1;
}

}  // namespace brdp
