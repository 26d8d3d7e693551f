#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hetero::par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline bool in_parallel() {
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

/// Runs fn(i) for i in [0, n). Iterations must be independent. The first
/// exception thrown by any iteration is rethrown after the loop. Inside an
/// enclosing parallel region the loop runs serially.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr failure;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) if (!in_parallel() && n > 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(hetero_parallel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// Fixed-size chunking used by deterministic reductions: results are
/// combined in chunk order, independent of thread count.
inline constexpr std::size_t kChunk = 4096;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunk) {
  return (n + chunk - 1) / chunk;
}

}  // namespace hetero::par
