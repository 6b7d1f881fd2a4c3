#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "vqp/rng.hpp"

using vqp::Rng;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different stream labels decorrelate") {
  Rng a = Rng::stream(7, 0, Rng::tag("noise"));
  Rng b = Rng::stream(7, 1, Rng::tag("noise"));
  Rng c = Rng::stream(7, 0, Rng::tag("shuffle"));
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    uint64_t x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    same_ab += (x == y);
    same_ac += (x == z);
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("stream derivation is order sensitive") {
  Rng a = Rng::stream(3, 1, 2);
  Rng b = Rng::stream(3, 2, 1);
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("tag is FNV-1a over the label") {
  // h0 = offset basis, then one step per byte
  uint64_t h = 0xcbf29ce484222325ULL;
  h = (h ^ 'a') * 0x100000001b3ULL;
  CHECK(Rng::tag("a") == h);
  CHECK(Rng::tag("") == 0xcbf29ce484222325ULL);
  CHECK(Rng::tag("noise") != Rng::tag("shuffle"));
}

TEST_CASE("uniform01 stays in [0,1) and fills the range") {
  Rng r(123);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo,hi) respects the interval") {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform(-2.5, 3.5);
    CHECK(u >= -2.5);
    CHECK(u < 3.5);
  }
}

TEST_CASE("normal has roughly unit moments") {
  Rng r(99);
  const int n = 50000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("normal(mean,sigma) shifts and scales") {
  Rng a(7), b(7);
  double x = a.normal();
  double y = b.normal(10.0, 2.0);
  CHECK(y == doctest::Approx(10.0 + 2.0 * x).epsilon(1e-12));
}

TEST_CASE("below(n) is always < n and hits every residue") {
  Rng r(17);
  std::set<uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    uint64_t v = r.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("shuffle permutes without loss") {
  Rng r(31);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  std::vector<int> orig = v;
  r.shuffle(v);
  CHECK(v != orig);  // 50! permutations; identity is effectively impossible
  std::sort(v.begin(), v.end());
  CHECK(v == orig);
}

TEST_CASE("shuffle with a fixed seed is reproducible") {
  std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8}, b = a;
  Rng ra(911), rb(911);
  ra.shuffle(a);
  rb.shuffle(b);
  CHECK(a == b);
}
