#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qgt/dataset.hpp"
#include "qgt/loss.hpp"
#include "qgt/nn.hpp"

namespace qgt {

struct TrainConfig {
  int batch_size = 128;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  std::string loss = "balanced_mse";

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per-sample means, one entry per epoch
  std::vector<double> val_loss;
  int best_epoch = 0;  // 1-based epoch whose snapshot was returned

  int epochs_run() const { return static_cast<int>(val_loss.size()); }
};

// Shuffled mini-batch epochs with Adam; stops once the eval-mode validation
// loss has not improved for `patience` epochs and returns the parameter
// snapshot of the best validation epoch.
std::pair<MlpModel, TrainHistory> train(MlpModel model, const Dataset& train_set,
                                        const Dataset& val_set,
                                        const TrainConfig& cfg);

struct Threshold {
  double value = 0.5;
};

// Smallest threshold maximizing the exact-recovery rate on the validation
// set. Candidates are midpoints between consecutive distinct predicted
// values plus one sentinel on each side; the rate is piecewise constant
// with breakpoints only at predicted values, so the set is exhaustive.
Threshold calibrate_threshold(const MlpModel& model, const Dataset& val_set);

// Elementwise thresholding of the eval-mode prediction; boundary maps to 1.
std::vector<std::uint8_t> decode(const MlpModel& model,
                                 std::span<const std::int32_t> measurement,
                                 Threshold threshold);

// Eval-mode per-sample mean loss over a whole split.
double validation_loss(const MlpModel& model, const Matrix& targets,
                       const Matrix& inputs);

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace qgt
