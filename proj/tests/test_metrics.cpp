#include <doctest.h>
#include <vector>

#include "qgt/errors.hpp"
#include "qgt/metrics.hpp"

using namespace qgt;

namespace {
std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}
}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hand-counted example") {
  const auto m = sample_metrics(bits({1, 1, 0, 0}), bits({1, 0, 1, 0}));
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.f1 == doctest::Approx(0.5));
  CHECK(m.success == 0.0);
  CHECK(m.mse == doctest::Approx(0.5));
}

TEST_CASE("perfect recovery") {
  const auto m = sample_metrics(bits({1, 0, 1, 0}), bits({1, 0, 1, 0}));
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.success == 1.0);
  CHECK(m.mse == 0.0);
}

TEST_CASE("empty-support convention") {
  const auto m = sample_metrics(bits({0, 0, 0}), bits({0, 0, 0}));
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.success == 1.0);
  CHECK(m.mse == 0.0);
}

TEST_CASE("degenerate denominators") {
  // nothing predicted, something missed
  auto m = sample_metrics(bits({1, 0}), bits({0, 0}));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  // something predicted, nothing true
  m = sample_metrics(bits({0, 0}), bits({1, 0}));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS((void)sample_metrics(bits({1, 0}), bits({1})), InvalidArgument);
  const std::vector<std::uint8_t> bad{2, 0};
  CHECK_THROWS_AS((void)sample_metrics(bad, bad), InvalidArgument);
}

TEST_CASE("f1 identity and success/mse coupling on random vectors") {
  std::uint64_t state = 12345;
  const auto next_bit = [&state] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return std::uint8_t((state >> 62) & 1);
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::uint8_t> truth(16), pred(16);
    for (int j = 0; j < 16; ++j) {
      truth[j] = next_bit();
      pred[j] = next_bit();
    }
    const auto m = sample_metrics(truth, pred);
    if (m.precision + m.recall > 0.0)
      CHECK(m.f1 == doctest::Approx(2.0 * m.precision * m.recall /
                                    (m.precision + m.recall)));
    CHECK((m.success == 1.0) == (m.mse == 0.0));
    int hamming = 0;
    for (int j = 0; j < 16; ++j) hamming += truth[j] != pred[j];
    CHECK(m.mse == doctest::Approx(hamming / 16.0));
  }
}

TEST_CASE("aggregate of a single sample is that sample") {
  const auto s = sample_metrics(bits({1, 1, 0, 0}), bits({1, 0, 1, 0}));
  const auto report = aggregate({s});
  CHECK(report.count == 1);
  CHECK(report.mean.precision == s.precision);
  CHECK(report.mean.mse == s.mse);
}

TEST_CASE("aggregate averages success rates") {
  const auto a = sample_metrics(bits({1, 0}), bits({1, 0}));
  const auto b = sample_metrics(bits({1, 0}), bits({0, 0}));
  const auto report = aggregate({a, b});
  CHECK(report.mean.success == doctest::Approx(0.5));
}

TEST_CASE("aggregate means match an independent recomputation") {
  std::uint64_t state = 999;
  const auto next_bit = [&state] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return std::uint8_t((state >> 61) % 2);
  };
  std::vector<SampleMetrics> samples;
  double sum_f1 = 0.0, sum_mse = 0.0;
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::uint8_t> truth(10), pred(10);
    for (int j = 0; j < 10; ++j) {
      truth[j] = next_bit();
      pred[j] = next_bit();
    }
    samples.push_back(sample_metrics(truth, pred));
    sum_f1 += samples.back().f1;
    sum_mse += samples.back().mse;
  }
  const auto report = aggregate(std::move(samples));
  CHECK(report.mean.f1 == doctest::Approx(sum_f1 / 5000.0).epsilon(1e-12));
  CHECK(report.mean.mse == doctest::Approx(sum_mse / 5000.0).epsilon(1e-12));
}

TEST_CASE("aggregate rejects an empty list") {
  CHECK_THROWS_AS((void)aggregate({}), InvalidArgument);
}

}  // TEST_SUITE
