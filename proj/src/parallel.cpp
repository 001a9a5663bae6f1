#include "spectralopt/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "spectralopt/matrix.hpp"

namespace spectralopt {

int parse_thread_count(const std::string& text) {
  if (text.empty()) throw NumericError("SPECTRAL_OPT_THREADS: empty value");
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(text, &pos);
  } catch (const std::exception&) {
    throw NumericError("SPECTRAL_OPT_THREADS: not an integer: " + text);
  }
  if (pos != text.size() || value < 0) {
    throw NumericError("SPECTRAL_OPT_THREADS: expected a non-negative integer, got " + text);
  }
  if (value == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return value;
}

int thread_count() {
  const char* env = std::getenv("SPECTRAL_OPT_THREADS");
  if (env == nullptr) return parse_thread_count("0");
  return parse_thread_count(env);
}

void parallel_for(int n, const std::function<void(int)>& fn, int threads) {
  if (n <= 0) return;
  int workers = threads == 0 ? thread_count() : threads;
  if (workers < 1) workers = 1;
  if (workers > n) workers = n;
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spectralopt
