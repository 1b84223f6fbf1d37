#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace polyboost {

/// Applies `fn(index)` for every index in [0, count) across at most `workers`
/// threads. Results land at their input index, so output order always equals
/// input order regardless of completion order. If any call throws, remaining
/// work is abandoned and the exception thrown at the smallest failing index is
/// rethrown; `completed` and `failed_index`, when given, receive the number of
/// calls that finished successfully and the index whose exception is rethrown.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t count, std::size_t workers, Fn&& fn,
                                 std::size_t* completed = nullptr,
                                 std::size_t* failed_index = nullptr) {
  std::vector<Result> results(count);
  if (count == 0) {
    if (completed) *completed = 0;
    return results;
  }
  workers = std::max<std::size_t>(1, std::min(workers, count));

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;

  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t index = next.fetch_add(1, std::memory_order_relaxed);
      if (index >= count) return;
      try {
        results[index] = fn(index);
        done.fetch_add(1, std::memory_order_relaxed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error || index < error_index) {
          error = std::current_exception();
          error_index = index;
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& thread : pool) thread.join();
  }

  if (completed) *completed = done.load();
  if (error) {
    if (failed_index) *failed_index = error_index;
    std::rethrow_exception(error);
  }
  return results;
}

}  // namespace polyboost
