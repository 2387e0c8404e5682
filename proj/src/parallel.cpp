#include "pmt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

namespace pmt {

namespace {

int default_workers() {
  if (const char* env = std::getenv("PMT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef PMT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_workers{0};

}  // namespace

void set_worker_count(int workers) { g_workers = std::max(1, workers); }

int worker_count() {
  int n = g_workers.load();
  if (n == 0) {
    n = default_workers();
    g_workers = n;
  }
  return n;
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

}  // namespace pmt
