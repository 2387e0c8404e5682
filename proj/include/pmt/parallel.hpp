#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef PMT_HAVE_OPENMP
#include <omp.h>
#endif

namespace pmt {

void set_worker_count(int workers);
int worker_count();

/// Runs body(i) for i in [0, n). Exceptions thrown by the body are rethrown
/// on the calling thread (the first one wins).
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
#ifdef PMT_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count())
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#ifdef PMT_HAVE_OPENMP
#pragma omp critical(pmt_parallel_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Pairwise (tree) summation in a fixed order.
double pairwise_sum(const double* values, std::size_t n);

/// Sum of term(i) over [0, n) with a reduction order that depends only on n,
/// so results are bit-identical for any worker count.
template <typename Term>
double deterministic_sum(std::size_t n, Term&& term) {
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = begin + kChunk < n ? begin + kChunk : n;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    partial[c] = s;
  });
  return pairwise_sum(partial.data(), partial.size());
}

}  // namespace pmt
