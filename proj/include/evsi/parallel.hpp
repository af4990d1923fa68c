#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace evsi {

// Running mean and sum of squared deviations (Welford), mergeable in a fixed
// order (Chan et al.) so that block-parallel reductions are reproducible.
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) noexcept {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(o.count);
    const double n = n_a + n_b;
    const double delta = o.mean - mean;
    mean += delta * (n_b / n);
    m2 += o.m2 + delta * delta * (n_a * n_b / n);
    count += o.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }

  double sd() const noexcept { return std::sqrt(variance()); }

  // Standard error of the mean.
  double se() const noexcept {
    return count > 0 ? sd() / std::sqrt(static_cast<double>(count)) : 0.0;
  }
};

// Number of iterations per reduction block. Fixed, so the summation tree does
// not depend on the worker count.
inline constexpr std::uint64_t kBlockSize = 2048;

inline unsigned default_workers() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(iteration, acc) for every iteration in [0, n_iter), accumulating
// into one Acc per block, then merges the blocks in index order with
// Acc::merge. The result is bit-identical for any worker count.
template <class Acc, class Body>
Acc parallel_accumulate(std::uint64_t n_iter, unsigned workers, const Acc& init, Body&& body) {
  const std::uint64_t n_blocks = (n_iter + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> blocks(n_blocks, init);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        const std::uint64_t lo = b * kBlockSize;
        const std::uint64_t hi = std::min(n_iter, lo + kBlockSize);
        for (std::uint64_t i = lo; i < hi; ++i) body(i, blocks[b]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_blocks);
        return;
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, workers), std::max<std::uint64_t>(1, n_blocks)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = init;
  for (const auto& blk : blocks) total.merge(blk);
  return total;
}

}  // namespace evsi
