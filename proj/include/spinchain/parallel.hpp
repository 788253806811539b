#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace spinchain {

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on a bounded pool. Results come back in index
/// order whatever the completion order; the lowest-index exception wins.
template <class Job>
auto parallel_map(std::size_t n, std::size_t workers, Job&& job)
    -> std::vector<std::invoke_result_t<Job&, std::size_t>> {
  using R = std::invoke_result_t<Job&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(job(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t pool = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));
  if (pool <= 1) {
    drain();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(drain);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace spinchain
