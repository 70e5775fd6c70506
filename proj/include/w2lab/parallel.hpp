#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace w2lab {

/// Runs job(i) for i in [0, count) on at most `workers` threads. Jobs pick
/// indices from a shared counter; callers store results by index, so the
/// outcome never depends on scheduling. The first exception (lowest job id)
/// is rethrown after all threads finish.
template <class Job>
void run_jobs(std::size_t count, std::size_t workers, Job&& job) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_id = count;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (i < failed_id) {
          failed_id = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const std::size_t n_threads = workers < count ? workers : count;
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace w2lab
