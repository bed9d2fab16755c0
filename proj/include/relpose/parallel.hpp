#pragma once

#include <cstddef>

#ifdef RELPOSE_HAS_OPENMP
#include <omp.h>
#endif

namespace relpose::parallel {

inline int max_threads() {
#ifdef RELPOSE_HAS_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef RELPOSE_HAS_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Runs fn(i) for i in [0, n). Each iteration must be independent; results
// must be written to slots keyed by i so the output does not depend on
// scheduling order. `threads <= 1` forces the serial reference path.
template <typename Fn>
void for_each_index(std::size_t n, Fn&& fn, int threads = 0) {
#ifdef RELPOSE_HAS_OPENMP
  if (threads != 1) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (long long i = 0; i < nn; ++i) fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)threads;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace relpose::parallel
