// Seed derivation and small deterministic sampling helpers.
//
// Everything random in the library is driven from one user seed. Sub-seeds
// are derived by hashing (seed, label) or (seed, index), so results do not
// depend on thread scheduling or on the order in which streams are created.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace rumfit {

using Rng = std::mt19937_64;

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Uniform integer in [0, bound) by rejection; bound must be positive.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Fisher-Yates with uniform_below, so the result is identical on every
// standard library (std::shuffle is implementation defined).
template <typename T>
void shuffle_in_place(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// executed exactly once; callers write results into per-index slots.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rumfit
