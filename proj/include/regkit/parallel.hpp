#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace regkit {

enum class Exec { serial, parallel };

/// Runs f(i) for i in [0, n). With Exec::parallel the indices are spread over
/// OpenMP threads; the first exception by index is rethrown after the loop.
/// Callers write results into slot i so the output never depends on
/// scheduling.
template <class F>
void parallel_for(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Caps the OpenMP worker count; 0 leaves the runtime default.
void set_thread_limit(int threads);
int thread_limit();

}  // namespace regkit
