#pragma once

#include <cstddef>
#include <functional>

namespace tunnelshock {

/// Worker count used when a call site passes threads = 0. Initialised from
/// TUNNELSHOCK_THREADS, else 1.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Runs body(i) for i in [0, n). Each index is processed exactly once and
/// results must be written to index-addressed storage, so output never depends
/// on scheduling. If bodies throw, the exception of the smallest failing index
/// is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace tunnelshock
