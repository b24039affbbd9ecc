#pragma once

#include <functional>

namespace estrnn {

// Worker-thread cap: ESTRNN_THREADS when set, hardware concurrency otherwise.
int env_thread_limit();

// Runs fn(0..n-1) across up to max_threads workers (static index striping).
// Used only for independent per-sequence work, so scheduling cannot change
// any numeric result. The first exception thrown by a worker is rethrown.
void parallel_for(int n, int max_threads, const std::function<void(int)>& fn);

}  // namespace estrnn
