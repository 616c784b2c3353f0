#pragma once

// Minimal timing harness for the benchmark surface: median of wall-clock
// repetitions after a short warmup.  Medians, not means — a single scheduler
// hiccup should not move the reported figure.

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <vector>

namespace cmgf {

struct BenchStats {
  double median_us = 0.0;
  double min_us = 0.0;
  double max_us = 0.0;
  int reps = 0;
};

template <class F>
inline BenchStats bench_median(F &&body, int reps, int warmup = 3) {
  if (reps < 1)
    throw std::domain_error("bench: repetitions must be >= 1");
  for (int i = 0; i < warmup; ++i)
    body();
  std::vector<double> us(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    us[static_cast<std::size_t>(i)] =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  std::sort(us.begin(), us.end());
  const std::size_t n = us.size();
  BenchStats st;
  st.median_us = (n % 2 == 1) ? us[n / 2] : 0.5 * (us[n / 2 - 1] + us[n / 2]);
  st.min_us = us.front();
  st.max_us = us.back();
  st.reps = reps;
  return st;
}

} // namespace cmgf
