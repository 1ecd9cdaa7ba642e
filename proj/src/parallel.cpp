#include "wavesrc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace wavesrc {
namespace {

unsigned machine_default() {
  if (const char* env = std::getenv("WAVESRC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& configured() {
  static std::atomic<unsigned> n{0};
  return n;
}

}  // namespace

unsigned thread_count() {
  const unsigned n = configured().load();
  return n == 0 ? machine_default() : n;
}

void set_thread_count(unsigned n) { configured().store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body, unsigned workers) {
  if (n == 0) return;
  if (workers == 0) workers = thread_count();
  const std::size_t chunks = std::min<std::size_t>(workers, n);
  if (chunks <= 1) {
    body(0, n);
    return;
  }
  const std::size_t base = n / chunks;
  const std::size_t extra = n % chunks;
  auto bounds = [&](std::size_t c) {
    const std::size_t begin = c * base + std::min(c, extra);
    return std::pair{begin, begin + base + (c < extra ? 1 : 0)};
  };

  std::vector<std::thread> threads;
  threads.reserve(chunks - 1);
  std::vector<std::exception_ptr> errors(chunks);
  for (std::size_t c = 1; c < chunks; ++c) {
    threads.emplace_back([&, c] {
      try {
        const auto [b, e] = bounds(c);
        body(b, e);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  try {
    const auto [b, e] = bounds(0);
    body(b, e);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace wavesrc
