#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "onionlens/infer/kernels.hpp"

namespace onionlens::infer::detail {

/// Splits [0, count) into contiguous chunks, one per worker. `fn(begin, end)`
/// must only write outputs owned by its range.
template <typename Fn>
void parallel_for(std::int64_t count, std::int64_t min_chunk, Fn&& fn) {
  const std::int64_t max_workers = std::max<std::int64_t>(1, count / std::max<std::int64_t>(1, min_chunk));
  const std::int64_t workers = std::min<std::int64_t>(kernel_threads(), max_workers);
  if (workers <= 1) {
    fn(std::int64_t{0}, count);
    return;
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::int64_t{0}, std::min(count, chunk));
}

}  // namespace onionlens::infer::detail
