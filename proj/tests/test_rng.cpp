#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "spectralopt/rng.hpp"

using namespace spectralopt;

TEST_SUITE("rng") {

TEST_CASE("splitmix64 matches the reference first output") {
  // Published test vector for the splitmix64 finalizer.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("same seed reproduces the same stream") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(1234), d(1234);
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("uniform lies in the half-open unit interval") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("uniform_int covers its inclusive range") {
  Rng rng(6);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.uniform_int(3, 7);
    CHECK(v >= 3);
    CHECK(v <= 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(7);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("fork depends only on the seed, not on draw position") {
  Rng a(42);
  Rng child_before = a.fork(3);
  a.next_u64();
  a.normal();
  Rng child_after = a.fork(3);
  for (int i = 0; i < 10; ++i) {
    CHECK(child_before.next_u64() == child_after.next_u64());
  }
}

TEST_CASE("sibling forks are distinct from each other and the parent") {
  Rng a(42);
  Rng f1 = a.fork(1), f2 = a.fork(2);
  int same12 = 0, same1p = 0;
  Rng parent(42);
  for (int i = 0; i < 64; ++i) {
    const auto v1 = f1.next_u64();
    same12 += v1 == f2.next_u64();
    same1p += v1 == parent.next_u64();
  }
  CHECK(same12 == 0);
  CHECK(same1p == 0);
}

}  // TEST_SUITE
