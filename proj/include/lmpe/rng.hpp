#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lmpe {

/// Seeded random source for the benchmark builders.
///
/// The engine is std::mt19937_64, whose output stream is exactly specified by
/// the standard, so identical seeds give identical draws on every platform.
/// Bounded draws and shuffles are implemented here on the raw 64-bit outputs
/// because the standard's distribution templates are not portable across
/// library implementations.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Unbiased draw in [0, n) via rejection sampling. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates shuffle using below().
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// First k elements of a shuffled index permutation [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(k);
    return idx;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace lmpe
