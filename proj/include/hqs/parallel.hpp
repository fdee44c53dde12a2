// Chunked parallel map with deterministic reduction. Work is split into
// fixed-size chunks independent of the worker count, so per-chunk results
// (and any floating-point reduction over them in chunk order) are identical
// no matter how many threads run. HQSTREAM_THREADS caps the pool.
#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hqs {

inline unsigned thread_cap() {
  if (const char* env = std::getenv("HQSTREAM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return unsigned(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// f(chunk_index, begin, end) over [0, n) in chunks of grain elements.
template <class F>
void parallel_chunks(std::size_t n, std::size_t grain, F&& f) {
  if (n == 0) return;
  if (grain == 0) grain = 1;
  const std::size_t chunks = (n + grain - 1) / grain;
  unsigned workers = std::min<std::size_t>(thread_cap(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      f(c, c * grain, std::min(n, (c + 1) * grain));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1))
      f(c, c * grain, std::min(n, (c + 1) * grain));
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

// Deterministic parallel sum of f(i) over [0, n).
template <class F>
double parallel_sum(std::size_t n, std::size_t grain, F&& f) {
  if (n == 0) return 0.0;
  if (grain == 0) grain = 1;
  const std::size_t chunks = (n + grain - 1) / grain;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(n, grain, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += f(i);
    partial[c] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace hqs
