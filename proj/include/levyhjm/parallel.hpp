#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace levyhjm {

/// Worker count: LEVY_HJM_THREADS if set and positive, else hardware concurrency.
std::size_t default_threads();

/// Calls fn(i) for i in [0, n) on `threads` workers. Each index is handled
/// exactly once; callers store results by index so the outcome does not
/// depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& fn, std::size_t threads = 0) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); }, threads);
  return out;
}

/// Pairwise summation in a fixed order.
double pairwise_sum(std::span<const double> xs);

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
};

SampleStats sample_stats(std::span<const double> xs);

/// Unbiased sample covariance with its standard error (delta method on the
/// products of centred values).
struct CovarianceStats {
  double covariance = 0.0;
  double std_error = 0.0;
};

CovarianceStats sample_covariance(std::span<const double> xs, std::span<const double> ys);

}  // namespace levyhjm
