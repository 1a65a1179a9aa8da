#include "cesim/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cesim {

namespace {
exec g_default =
#ifdef _OPENMP
    exec::omp;
#else
    exec::serial;
#endif
}  // namespace

exec default_exec() { return g_default; }

void set_default_exec(exec mode) { g_default = mode; }

int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cesim
