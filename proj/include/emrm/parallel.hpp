#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace emrm {

// Worker count from EMRM_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("EMRM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count).  Work is split into contiguous chunks;
// callers store results by index so any reduction order stays fixed.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = thread_count()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t begin = count * t / threads;
      const std::size_t end = count * (t + 1) / threads;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Pairwise sum; the tree shape depends only on the length.
template <typename T>
T pairwise_sum(const std::vector<T>& v, std::size_t begin, std::size_t end) {
  if (end - begin == 0) return T{};
  if (end - begin == 1) return v[begin];
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(v, begin, mid) + pairwise_sum(v, mid, end);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v, 0, v.size());
}

}  // namespace emrm
