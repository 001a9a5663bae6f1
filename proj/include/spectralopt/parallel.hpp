#pragma once

#include <functional>
#include <optional>
#include <string>

namespace spectralopt {

// Worker cap from SPECTRAL_OPT_THREADS; 0 or unset means auto (hardware
// concurrency). Malformed values throw NumericError.
int thread_count();

// Parses a thread-count string per the env-var rules.
int parse_thread_count(const std::string& text);

// Runs fn(0..n-1) across up to `threads` workers (0 = thread_count()).
// Each index is processed exactly once; callers write to per-index slots so
// results do not depend on scheduling. The first exception is rethrown.
void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0);

}  // namespace spectralopt
