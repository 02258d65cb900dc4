#include "regkit/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace regkit {

namespace {
int g_thread_limit = 0;
}

void set_thread_limit(int threads) {
  g_thread_limit = threads;
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
}

int thread_limit() { return g_thread_limit; }

}  // namespace regkit
