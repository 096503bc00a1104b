#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "seqdet/rng.hpp"

namespace seqdet {

// Shared knobs for one Monte Carlo call site. seed is the operation-level
// seed (derive per-replication engines from it via make_engine(seed, rep)).
struct McContext {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t chunk = 1024;
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(rep_begin, rep_end, acc) over [0, n_reps) in fixed-size chunks.
// Each chunk owns an accumulator slot and slots merge in chunk order, so the
// result is bit-identical for every thread count. Replication randomness must
// come from make_engine(ctx.seed, rep) only.
template <class Acc, class ChunkFn>
Acc run_chunked(const McContext& ctx, std::uint64_t n_reps, ChunkFn fn) {
  const std::uint64_t chunk = ctx.chunk == 0 ? 1 : ctx.chunk;
  const std::uint64_t n_chunks = (n_reps + chunk - 1) / chunk;
  std::vector<Acc> slots(n_chunks);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks || failed.load(std::memory_order_relaxed)) return;
      const std::uint64_t begin = c * chunk;
      const std::uint64_t end = std::min(n_reps, begin + chunk);
      try {
        fn(begin, end, slots[c]);
      } catch (...) {
        std::scoped_lock lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const std::uint64_t want = static_cast<std::uint64_t>(resolve_threads(ctx.threads));
  const int threads = static_cast<int>(std::min<std::uint64_t>(
      std::max<std::uint64_t>(1, want), std::max<std::uint64_t>(1, n_chunks)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  Acc total;
  for (auto& slot : slots) total.merge(slot);
  return total;
}

// Mean/variance accumulator whose merge is a plain ordered sum.
struct MeanAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t n = 0;
  std::uint64_t flagged = 0;  // e.g. truncated replications

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const MeanAcc& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
    flagged += o.flagged;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (sum_sq - static_cast<double>(n) * m * m) /
                     static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_err() const {
    return n == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
  }
};

}  // namespace seqdet
