#include <cmath>
#include <vector>

#include "adalign/rng.hpp"
#include "doctest.h"

namespace ad = adalign;

TEST_SUITE("rng") {

TEST_CASE("same seed and stream reproduce the sequence") {
  ad::CounterRng a(42, "data");
  ad::CounterRng b(42, "data");
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams with the same seed are decorrelated") {
  ad::CounterRng a(42, "data");
  ad::CounterRng b(42, "init");
  int equal = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("state round-trips through key and counter") {
  ad::CounterRng a(7, "frequencies");
  for (int i = 0; i < 17; ++i) a.next_u64();
  ad::CounterRng b(a.key(), a.counter());
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform draws live in [0, 1)") {
  ad::CounterRng rng(3, "u");
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have roughly standard moments") {
  ad::CounterRng rng(11, "n");
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("next_below stays in range and hits every bucket") {
  ad::CounterRng rng(5, "b");
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.next_below(7);
    REQUIRE(v < 7);
    ++hits[static_cast<int>(v)];
  }
  for (int h : hits) CHECK(h > 0);
}

}  // TEST_SUITE
