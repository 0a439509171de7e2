#include "qgt/forward_model.hpp"

#include <string>

#include "qgt/errors.hpp"

namespace qgt {

PoolingMatrix gen_pooling_matrix(int pools, int items, Rng& rng) {
  if (pools < 1 || items < 1)
    throw InvalidArgument("gen_pooling_matrix: dimensions must be >= 1");
  PoolingMatrix a;
  a.pools = pools;
  a.items = items;
  a.entries.resize(static_cast<std::size_t>(pools) * items);
  for (auto& e : a.entries) e = rng.bernoulli(0.5) ? 1 : 0;
  return a;
}

BinarySignal gen_signal(int items, double expected_defectives, Rng& rng) {
  if (items < 1) throw InvalidArgument("gen_signal: items must be >= 1");
  if (expected_defectives < 0.0 || expected_defectives > items)
    throw InvalidArgument("gen_signal: expected defectives must lie in [0, items]");
  BinarySignal x;
  x.expected_sparsity = expected_defectives;
  x.values.resize(items);
  const double p = expected_defectives / items;
  for (auto& v : x.values) v = rng.bernoulli(p) ? 1 : 0;
  return x;
}

NoiseVector gen_noise(int pools, double noise_sparsity, int items,
                      std::int32_t magnitude_bound, Rng& rng) {
  if (pools < 1) throw InvalidArgument("gen_noise: pools must be >= 1");
  if (items < 1) throw InvalidArgument("gen_noise: items must be >= 1");
  if (noise_sparsity < 0.0 || noise_sparsity > items)
    throw InvalidArgument("gen_noise: sparsity must lie in [0, items]");
  if (magnitude_bound < 0)
    throw InvalidArgument("gen_noise: magnitude bound must be non-negative");
  NoiseVector eta;
  eta.sparsity_param = noise_sparsity;
  eta.magnitude_bound = magnitude_bound;
  eta.values.resize(pools);
  const double p = noise_sparsity / items;
  for (auto& v : eta.values) {
    // The uniform support {-bound, ..., bound} includes 0, so some active
    // draws are silent by construction.
    v = rng.bernoulli(p)
            ? static_cast<std::int32_t>(rng.uniform_int(-magnitude_bound, magnitude_bound))
            : 0;
  }
  return eta;
}

Measurement measure(const PoolingMatrix& design, const BinarySignal& signal,
                    const NoiseVector& noise) {
  if (static_cast<int>(signal.values.size()) != design.items)
    throw InvalidArgument("measure: signal length " +
                          std::to_string(signal.values.size()) +
                          " does not match design items " +
                          std::to_string(design.items));
  if (static_cast<int>(noise.values.size()) != design.pools)
    throw InvalidArgument("measure: noise length " +
                          std::to_string(noise.values.size()) +
                          " does not match design pools " +
                          std::to_string(design.pools));
  Measurement y;
  y.values.resize(design.pools);
  for (int i = 0; i < design.pools; ++i) {
    const auto row = design.row(i);
    std::int32_t count = 0;
    for (int j = 0; j < design.items; ++j) count += row[j] & signal.values[j];
    y.values[i] = count + noise.values[i];
  }
  return y;
}

}  // namespace qgt
