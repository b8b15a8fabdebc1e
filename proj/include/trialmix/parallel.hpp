#pragma once

// Fixed-chunk parallel loops. Work is split into chunks of a size that does
// not depend on the thread count, and partial reductions are combined in
// chunk order, so results are bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trialmix::parallel {

inline constexpr int kChunk = 64;

/// Worker cap used by all parallel loops (1 = serial). Defaults to 1.
int threads();
void set_threads(int n);

namespace detail {

template <class ChunkFn>
void run_chunks(int n_chunks, ChunkFn&& fn) {
  const int workers = std::min(threads(), n_chunks);
  if (workers <= 1) {
    for (int c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
      try {
        fn(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Calls fn(i) for i in [0, n).
template <class Fn>
void for_each_index(int n, Fn&& fn) {
  const int n_chunks = (n + kChunk - 1) / kChunk;
  detail::run_chunks(n_chunks, [&](int c) {
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) fn(i);
  });
}

/// Sums fn(i) over [0, n) with a thread-count independent association order.
/// `Acc` must be copyable and support `+=`.
template <class Acc, class Fn>
Acc sum_over(int n, const Acc& zero, Fn&& fn) {
  const int n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Acc> partial(static_cast<std::size_t>(n_chunks), zero);
  detail::run_chunks(n_chunks, [&](int c) {
    Acc& acc = partial[static_cast<std::size_t>(c)];
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) acc += fn(i);
  });
  Acc total = zero;
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace trialmix::parallel
