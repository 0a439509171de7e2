#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qgt/forward_model.hpp"
#include "qgt/matrix.hpp"

namespace qgt {

// Everything that determines a synthetic dataset, pooling design included.
struct GenConfig {
  int items = 0;                   // signal length
  int pools = 0;                   // measurement count
  double expected_defectives = 0;  // mean support size of a signal
  double noise_sparsity = 0;       // noise activation scale (active w.p. value/items)
  std::int32_t noise_bound = 0;    // max |noise entry|
  std::uint64_t seed = 0;

  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

const char* split_name(Split split);

struct SplitSizes {
  int train = 0;
  int val = 0;
  int test = 0;
};

// Columnar sample storage: row i of `signals` is the defect vector, row i of
// `measurements` the pooled counts it produced.
struct Dataset {
  PoolingMatrix pooling;
  Split split = Split::kTrain;
  GenConfig gen_config;
  int count = 0;
  std::vector<std::uint8_t> signals;       // count x items
  std::vector<std::int32_t> measurements;  // count x pools

  std::span<const std::uint8_t> signal(int i) const {
    return {signals.data() + static_cast<std::size_t>(i) * gen_config.items,
            static_cast<std::size_t>(gen_config.items)};
  }
  std::span<const std::int32_t> measurement(int i) const {
    return {measurements.data() + static_cast<std::size_t>(i) * gen_config.pools,
            static_cast<std::size_t>(gen_config.pools)};
  }
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Generates three splits sharing one pooling matrix. Each sample draws from
// its own (split, index) random stream, so sizes of one split never perturb
// another and regeneration with the same config is byte-identical.
DatasetSplits make_dataset(const GenConfig& config, const SplitSizes& sizes);

// Network-facing views: measurements as inputs, signals as regression targets.
Matrix to_input_matrix(const Dataset& ds);
Matrix to_target_matrix(const Dataset& ds);

// Binary container: one text header line, then fixed-width records
// (items bytes of signal, pools little-endian int32 of measurement).
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path, Split split = Split::kTest);

// Plain CSV for inspection: y_0..y_{pools-1}, x_0..x_{items-1}.
void export_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace qgt
