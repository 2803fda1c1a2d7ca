#pragma once

#include <algorithm>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

namespace istab {

/// Worker count: ISTAB_THREADS env var wins, then the explicit request, then
/// hardware concurrency.
inline int thread_count(int requested = 0) {
  if (const char* env = std::getenv("ISTAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Apply f(i) for i in [0, n) on a worker pool. f must be safe to run
/// concurrently for distinct i; results must be written to pre-sized storage
/// so that the output is independent of scheduling.
template <typename F>
void parallel_for(int n, F&& f, int requested_threads = 0) {
  const int nw = std::min(thread_count(requested_threads), std::max(n, 1));
  if (nw <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(nw);
  for (int w = 0; w < nw; ++w)
    futs.push_back(std::async(std::launch::async, [&, w] {
      for (int i = w; i < n; i += nw) f(i);
    }));
  for (auto& fu : futs) fu.get();
}

/// Deterministic sum of per-item values: items are evaluated in parallel but
/// accumulated in index order, so the result is bit-identical across thread
/// counts.
template <typename F>
double ordered_parallel_sum(int n, F&& f, int requested_threads = 0) {
  std::vector<double> parts(n, 0.0);
  parallel_for(n, [&](int i) { parts[i] = f(i); }, requested_threads);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += parts[i];
  return s;
}

}  // namespace istab
