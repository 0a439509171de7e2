#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qgt/rng.hpp"

namespace qgt {

// Binary pools-by-items design. Entry (i, j) = 1 means item j joins pool i.
struct PoolingMatrix {
  int pools = 0;  // rows
  int items = 0;  // cols
  std::vector<std::uint8_t> entries;  // row-major, values in {0, 1}

  std::uint8_t at(int pool, int item) const {
    return entries[static_cast<std::size_t>(pool) * items + item];
  }
  std::span<const std::uint8_t> row(int pool) const {
    return {entries.data() + static_cast<std::size_t>(pool) * items,
            static_cast<std::size_t>(items)};
  }
};

// Defect indicator vector, sparse in expectation: each entry is 1 with
// probability expected_sparsity / length.
struct BinarySignal {
  std::vector<std::uint8_t> values;
  double expected_sparsity = 0.0;
};

// Sparse bounded integer noise: each entry is, with probability
// sparsity_param / items, uniform over {-bound, ..., bound}; otherwise 0.
struct NoiseVector {
  std::vector<std::int32_t> values;
  double sparsity_param = 0.0;
  std::int32_t magnitude_bound = 0;
};

// Pooled counts: one integer per pool.
struct Measurement {
  std::vector<std::int32_t> values;
};

PoolingMatrix gen_pooling_matrix(int pools, int items, Rng& rng);

BinarySignal gen_signal(int items, double expected_defectives, Rng& rng);

NoiseVector gen_noise(int pools, double noise_sparsity, int items,
                      std::int32_t magnitude_bound, Rng& rng);

// Exact integer forward map: counts per pool plus noise.
Measurement measure(const PoolingMatrix& design, const BinarySignal& signal,
                    const NoiseVector& noise);

}  // namespace qgt
