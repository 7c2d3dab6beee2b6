#pragma once

#include <cstdint>
#include <functional>

namespace hsim {

// Global worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Static range partition over [0, n). Each index is processed by exactly one
// worker, so element-wise writes are race-free and results do not depend on
// the worker count. Reductions must not be done through this directly.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body);

// Convenience per-index form.
void parallel_for_each(int64_t n, const std::function<void(int64_t)>& body);

}  // namespace hsim
