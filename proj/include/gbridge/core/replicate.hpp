#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "gbridge/core/rng.hpp"

namespace gbridge {

/// Runs fn(rng, index) for index in [0, n) with rng = Rng::for_replicate(seed, index).
/// Work is split into contiguous blocks across `threads` workers (0 picks
/// hardware concurrency) and results are stored by index, so the output is
/// identical for any thread count. The first exception thrown is rethrown.
template <class Fn>
auto run_replicates(std::size_t n, std::uint64_t seed, Fn&& fn, unsigned threads = 0)
    -> std::vector<decltype(fn(std::declval<Rng&>(), std::size_t{}))> {
  using Result = decltype(fn(std::declval<Rng&>(), std::size_t{}));
  std::vector<Result> out;
  if (n == 0) return out;
  std::vector<std::optional<Result>> slots(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        Rng rng = Rng::for_replicate(seed, i);
        slots[i].emplace(fn(rng, i));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  if (failure) std::rethrow_exception(failure);
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace gbridge
