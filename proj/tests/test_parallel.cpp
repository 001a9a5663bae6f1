#include <atomic>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "spectralopt/matrix.hpp"
#include "spectralopt/parallel.hpp"

using namespace spectralopt;

TEST_SUITE("parallel") {

TEST_CASE("thread-count parsing") {
  CHECK(parse_thread_count("4") == 4);
  CHECK(parse_thread_count("1") == 1);
  CHECK(parse_thread_count("0") >= 1);  // auto resolves to the hardware
  CHECK_THROWS_AS(parse_thread_count(""), NumericError);
  CHECK_THROWS_AS(parse_thread_count("four"), NumericError);
  CHECK_THROWS_AS(parse_thread_count("4x"), NumericError);
  CHECK_THROWS_AS(parse_thread_count("-2"), NumericError);
  CHECK(thread_count() >= 1);
}

TEST_CASE("every index runs exactly once") {
  const int n = 503;
  std::vector<std::atomic<int>> hits(n);
  parallel_for(n, [&](int i) { hits[i].fetch_add(1); }, 4);
  for (int i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("empty ranges are a no-op") {
  bool touched = false;
  parallel_for(0, [&](int) { touched = true; }, 4);
  CHECK_FALSE(touched);
  parallel_for(-3, [&](int) { touched = true; }, 4);
  CHECK_FALSE(touched);
}

TEST_CASE("worker exceptions reach the caller") {
  CHECK_THROWS_AS(
      parallel_for(64, [](int i) {
        if (i == 17) throw std::runtime_error("boom");
      }, 4),
      std::runtime_error);
  // single-threaded path propagates directly too
  CHECK_THROWS_AS(
      parallel_for(4, [](int i) {
        if (i == 2) throw std::runtime_error("boom");
      }, 1),
      std::runtime_error);
}

TEST_CASE("results agree across worker counts") {
  const int n = 200;
  std::vector<double> one(n), four(n);
  auto work = [](int i) {
    double acc = 0.0;
    for (int k = 1; k <= 50; ++k) acc += static_cast<double>(i * k) / (k + 1);
    return acc;
  };
  parallel_for(n, [&](int i) { one[i] = work(i); }, 1);
  parallel_for(n, [&](int i) { four[i] = work(i); }, 4);
  CHECK(one == four);
}

}  // TEST_SUITE
