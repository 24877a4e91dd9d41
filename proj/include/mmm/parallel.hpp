#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mmm {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
/// are handed out in fixed-size blocks; callers must write results by index
/// so output is independent of the thread count.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  constexpr std::size_t kBlock = 16;
  auto worker = [&] {
    for (;;) {
      std::size_t begin;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= count || failure) return;
        begin = next;
        next = std::min(count, next + kBlock);
      }
      const std::size_t end = std::min(count, begin + kBlock);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mmm
