#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace lmpe {

/// Applies fn(index, item) to every element with up to `workers` threads and
/// returns the results in input order.
///
/// Determinism contract: results are keyed by index, so the output is
/// independent of scheduling. If several calls throw, the exception for the
/// lowest index is rethrown and the rest are discarded, so the error path is
/// schedule-independent as well.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, int workers, Fn fn)
    -> std::vector<decltype(fn(std::size_t{0}, items[0]))> {
  using R = decltype(fn(std::size_t{0}, items[0]));
  const std::size_t n = items.size();
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);

  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i, items[i]));
  } else {
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            slots[i].emplace(fn(i, items[i]));
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
  }

  std::vector<R> out;
  out.reserve(n);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace lmpe
