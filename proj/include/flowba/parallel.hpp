// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_PARALLEL_HPP
#define FLOWBA_PARALLEL_HPP

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flowba {

// Execution policy for the dense per-pixel kernels. Serial is the reference
// path; Parallel runs the same kernel body under OpenMP. Kernels are written
// so both paths produce bit-identical results: reductions accumulate into
// per-row slots and are combined in a fixed order, never via atomics.
enum class Exec { Serial, Parallel };

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(i) for i in [0, n). Iterations must be independent.
template <typename Fn>
inline void parallel_for(Exec exec, int64_t n, const Fn& fn) {
  if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
#endif
  }
  for (int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace flowba

#endif  // FLOWBA_PARALLEL_HPP
