#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgt/dataset.hpp"
#include "qgt/metrics.hpp"
#include "qgt/trainer.hpp"

namespace qgt {

// One experiment: a base generative configuration, an architecture, the
// seeds to average over, and (optionally) a sweep axis.
struct ExperimentConfig {
  int items = 100;
  int pools = 35;
  double expected_defectives = 6.0;
  double noise_sparsity = 6.0;
  std::int32_t noise_bound = 1;
  SplitSizes sizes{119205, 14900, 14900};
  std::vector<int> hidden{500, 500};
  std::optional<int> complexity_level;  // when set, overrides `hidden`
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrainConfig train;
  int jacobian_samples = 1000;
  std::string sweep_axis;           // "", "pools", "noise_ratio", "level"
  std::vector<double> sweep_values;
};

// Hidden-layer widths of the seven reference capacity levels
// (1 = bare linear map, 7 = five hidden blocks).
std::vector<int> hidden_for_level(int level);

// Resolved architecture of a config (level wins over the explicit list).
std::vector<int> resolved_hidden(const ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json_text(const std::string& text);

// FNV-1a over the canonical JSON form; keys result rows to their config.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Scales the dataset splits down 4x for CI-speed runs.
ExperimentConfig apply_smoke_profile(ExperimentConfig cfg);

struct SeedRunResult {
  std::uint64_t seed = 0;
  SampleMetrics test_mean;
  double tau = 0.0;
  double struct_err_pct = 0.0;
  double struct_err_clean_pct = 0.0;  // jacobians at noiseless inputs (diagnostic)
  bool ridge_applied = false;
  double condition_estimate = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double wall_seconds = 0.0;
};

struct ResultRow {
  ExperimentConfig config;  // resolved for this point
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::vector<SeedRunResult> per_seed;
  SampleMetrics mean_metrics;
  double mean_struct_err_pct = 0.0;
  double mean_struct_err_clean_pct = 0.0;
  double mean_tau = 0.0;
  double wall_seconds = 0.0;  // summed over seeds
};

struct RunOptions {
  std::filesystem::path output_root;  // empty: skip per-run artifact files
  int jobs = 1;                       // parallel seed-runs
  bool verbose = true;                // progress lines on stderr
};

// Full pipeline for every configured seed: generate data, train, calibrate,
// score the test split, recover the pooling matrix from jacobians, and
// aggregate the per-seed results into one row.
ResultRow run_single(const ExperimentConfig& cfg, const RunOptions& opts = {});

// One run_single per swept value, ascending. Measurement sweep varies the
// pool count; noise sweep varies the noise activation ratio (sparsity/items).
std::vector<ResultRow> run_sweep_measurements(const ExperimentConfig& cfg,
                                              const RunOptions& opts = {});
std::vector<ResultRow> run_sweep_noise(const ExperimentConfig& cfg,
                                       const RunOptions& opts = {});

// Levels 1-7, every configured seed, fresh pooling matrix per seed.
std::vector<ResultRow> run_complexity_study(const ExperimentConfig& cfg,
                                            const RunOptions& opts = {});

// Human-readable point label, also used for per-run artifact directories.
std::string point_label(const ExperimentConfig& cfg);

}  // namespace qgt
