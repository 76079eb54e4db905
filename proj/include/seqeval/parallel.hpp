#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace seqeval {

/// Bounds of chunk `k` when [0, n) is split into `chunks` contiguous pieces.
inline std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, std::size_t chunks, std::size_t k) {
  return {k * n / chunks, (k + 1) * n / chunks};
}

/// Runs f(begin, end, chunk_index) over `workers` contiguous chunks of
/// [0, n), one thread per chunk, and joins them. The first exception thrown
/// by any chunk is rethrown on the caller's thread.
template <class F>
void parallel_chunks(std::size_t n, std::size_t workers, F&& f) {
  const std::size_t chunks = std::max<std::size_t>(1, std::min(workers, n));
  if (chunks == 1) {
    f(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> threads;
    threads.reserve(chunks);
    for (std::size_t k = 0; k < chunks; ++k) {
      threads.emplace_back([&, k] {
        try {
          auto [b, e] = chunk_bounds(n, chunks, k);
          f(b, e, k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace seqeval
