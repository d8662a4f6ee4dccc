#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "agra/error.hpp"
#include "agra/text_format.hpp"

namespace agra {

// Worker count: an explicit request wins, then AGRA_THREADS, then 1.
inline std::size_t resolve_thread_count(std::size_t requested = 0) {
  if (requested > 0) return requested;
  const char* env = std::getenv("AGRA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t n = 0;
  if (!text::parse_int(std::string_view(env), n) || n == 0)
    throw Error(ErrorCode::Config, "AGRA_THREADS must be a positive integer, got '" + std::string(env) + "'");
  return n;
}

// Calls body(i) for i in [0, n) over contiguous chunks. Each index is
// handled exactly once, so results written to per-index slots do not depend
// on the worker count.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  threads = std::min(threads, n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace agra
