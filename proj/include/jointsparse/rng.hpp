#ifndef JOINTSPARSE_RNG_HPP
#define JOINTSPARSE_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace jointsparse {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for a named stream: splitmix64(base ^ splitmix64(stream)).
/// Chaining gives a splittable tree of seeds without global state.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return splitmix64(base ^ splitmix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  for (auto s : path)
    base = derive_seed(base, s);
  return base;
}

inline Matrix gaussian_matrix(Index rows, Index cols, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // Fill in row-major order so the draw sequence does not depend on storage order.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      out(i, j) = normal(rng);
  return out;
}

/// k distinct indices drawn uniformly from {0..n-1}, in draw order.
inline std::vector<Index> sample_without_replacement(Index n, Index k, Rng &rng) {
  detail::require(n >= 0 && k >= 0 && k <= n, "sample_without_replacement: need 0 <= k <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

} // namespace jointsparse

#endif
