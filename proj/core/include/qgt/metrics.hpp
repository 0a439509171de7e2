#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qgt {

struct SampleMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double success = 0.0;  // 1 iff exact recovery
  double mse = 0.0;      // normalized Hamming distance
};

// Support-recovery scores for one sample. Degenerate denominators:
// no positives predicted while some exist -> precision 0; no positives in
// truth while some were predicted -> recall 0; both supports empty ->
// precision = recall = f1 = 1.
SampleMetrics sample_metrics(std::span<const std::uint8_t> truth,
                             std::span<const std::uint8_t> pred);

struct MetricsReport {
  std::vector<SampleMetrics> samples;
  SampleMetrics mean;
  int count = 0;
};

MetricsReport aggregate(std::vector<SampleMetrics> samples);

}  // namespace qgt
