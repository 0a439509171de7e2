#include <doctest.h>

#include "qgt/errors.hpp"
#include "qgt/rng.hpp"

using namespace qgt;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("bernoulli extremes") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

TEST_CASE("uniform_int covers the inclusive range") {
  Rng rng(11);
  bool saw_lo = false, saw_hi = false;
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.uniform_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    saw_lo |= v == -2;
    saw_hi |= v == 2;
  }
  CHECK(saw_lo);
  CHECK(saw_hi);
  CHECK(rng.uniform_int(5, 5) == 5);
  CHECK_THROWS_AS((void)rng.uniform_int(2, 1), InvalidArgument);
}

TEST_CASE("streams are independent and deterministic") {
  Rng a = stream_rng(9, StreamKind::kSignal, 0, 0);
  Rng b = stream_rng(9, StreamKind::kSignal, 0, 0);
  CHECK(a.next_u64() == b.next_u64());

  Rng c = stream_rng(9, StreamKind::kSignal, 0, 1);
  Rng d = stream_rng(9, StreamKind::kSignal, 1, 0);
  Rng e = stream_rng(9, StreamKind::kNoise, 0, 0);
  Rng base = stream_rng(9, StreamKind::kSignal, 0, 0);
  const auto r = base.next_u64();
  CHECK(c.next_u64() != r);
  CHECK(d.next_u64() != r);
  CHECK(e.next_u64() != r);
}

}  // TEST_SUITE
