#pragma once

#include <cstdlib>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gridid {

// Thread budget: min(GRIDID_THREADS if set, OpenMP default). 1 without OpenMP.
inline int thread_budget() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("GRIDID_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
#else
  return 1;
#endif
}

// Fixed-chunk sum: identical result for any thread count (and for the serial
// reference path) because partials are always combined in chunk order.
inline constexpr int kSumChunk = 64;

template <typename F>
double chunked_sum(int n, F&& term) {
  const int nchunks = (n + kSumChunk - 1) / kSumChunk;
  std::vector<double> partial(static_cast<size_t>(nchunks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
  for (int c = 0; c < nchunks; ++c) {
    double s = 0.0;
    const int hi = std::min(n, (c + 1) * kSumChunk);
    for (int i = c * kSumChunk; i < hi; ++i) s += term(i);
    partial[static_cast<size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace gridid
