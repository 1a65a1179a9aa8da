#pragma once

#include <cstddef>

namespace cesim {

// Execution mode for the data-parallel kernels. Every parallel entry point
// also runs serially; tests compare the two paths for identical output.
enum class exec { serial, omp };

exec default_exec();
void set_default_exec(exec mode);
int hardware_threads();

namespace detail {
template <typename F>
void omp_for(std::ptrdiff_t n, F& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}
}  // namespace detail

// Runs body(i) for i in [0, n). Iterations must write disjoint state;
// determinism then holds for any schedule.
template <typename F>
void parallel_for(std::ptrdiff_t n, F&& body, exec mode = default_exec()) {
  if (mode == exec::omp) {
    detail::omp_for(n, body);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  }
}

}  // namespace cesim
