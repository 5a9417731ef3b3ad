#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rieszw {

/// Execution policy for batch kernels. Every parallel kernel has a serial
/// reference path; both evaluate each item with identical serial arithmetic,
/// so their outputs agree bit for bit.
enum class Exec { Serial, Parallel };

inline void set_worker_count(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Calls fn(i) for i in [0, count). Exceptions thrown by items are collected
/// and the one with the lowest index is rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t count, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  const auto total = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <class T, class Fn>
std::vector<T> map_indices(std::size_t count, Exec exec, Fn&& fn) {
  std::vector<T> out(count);
  for_each_index(count, exec, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace rieszw
