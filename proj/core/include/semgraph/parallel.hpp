#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace semgraph {

/// Worker cap: SEMGRAPH_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index
/// runs exactly once; if several throw, the exception of the lowest index is
/// rethrown so failures are reported deterministically.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace semgraph
