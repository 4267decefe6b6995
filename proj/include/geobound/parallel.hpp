#pragma once

#include <cstddef>
#include <functional>

namespace geobound {

/// Worker count: GEOBOUND_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int thread_count();

/// Calls body(i) for i in [0, n) on up to thread_count() threads. Indices are
/// handed out dynamically; the first exception thrown by any call is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace geobound
