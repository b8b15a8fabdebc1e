#include "trialmix/parallel.hpp"

namespace trialmix::parallel {
namespace {
std::atomic<int> g_threads{1};
}

int threads() { return g_threads.load(std::memory_order_relaxed); }

void set_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  g_threads.store(n);
}

}  // namespace trialmix::parallel
