// Deterministic work splitting. Chunk boundaries depend only on the problem
// size and results are folded in chunk-index order, so every reduction is
// bit-identical regardless of the thread count.
#ifndef BIOGDS_PARALLEL_HPP
#define BIOGDS_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace biogds {

// Process-wide worker count used by assembly and quadrature loops.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into fixed chunks, maps each chunk to a value of T, and folds
// the chunk values in chunk order.
template <typename T>
T parallel_map_reduce(std::size_t n, std::size_t chunk_size,
                      const std::function<T(std::size_t begin, std::size_t end)>& map,
                      const std::function<void(T& acc, T&& part)>& fold, T init) {
  if (n == 0) return init;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<T> parts(n_chunks);
  const int workers = std::max(1, thread_count());
  const std::size_t used = std::min<std::size_t>(workers, n_chunks);
  if (used <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t b = c * chunk_size;
      parts[c] = map(b, std::min(n, b + chunk_size));
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (std::size_t t = 0; t < used; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < n_chunks; c += used) {
          const std::size_t b = c * chunk_size;
          parts[c] = map(b, std::min(n, b + chunk_size));
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  T acc = std::move(init);
  for (auto& p : parts) fold(acc, std::move(p));
  return acc;
}

inline void parallel_for(std::size_t n, std::size_t chunk_size,
                         const std::function<void(std::size_t begin, std::size_t end)>& body) {
  parallel_map_reduce<int>(
      n, chunk_size,
      [&](std::size_t b, std::size_t e) {
        body(b, e);
        return 0;
      },
      [](int&, int&&) {}, 0);
}

}  // namespace biogds

#endif
