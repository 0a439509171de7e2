#include "qgt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "qgt/errors.hpp"
#include "qgt/format.hpp"

namespace qgt {

double validation_loss(const MlpModel& model, const Matrix& targets,
                       const Matrix& inputs) {
  return balanced_mse_mean(targets, eval_outputs(model, inputs));
}

std::pair<MlpModel, TrainHistory> train(MlpModel model, const Dataset& train_set,
                                        const Dataset& val_set,
                                        const TrainConfig& cfg) {
  if (train_set.count == 0 || val_set.count == 0)
    throw InvalidArgument("train: train and validation splits must be non-empty");
  if (train_set.gen_config.pools != model.input_dim ||
      train_set.gen_config.items != model.output_dim)
    throw InvalidArgument("train: dataset dimensions do not match the model");
  if (cfg.batch_size < 2) throw InvalidArgument("train: batch size must be >= 2");
  if (cfg.patience < 1) throw InvalidArgument("train: patience must be >= 1");
  if (cfg.max_epochs < 1) throw InvalidArgument("train: max epochs must be >= 1");
  if (cfg.loss != "balanced_mse")
    throw InvalidArgument("train: unknown loss variant '" + cfg.loss + "'");

  const Matrix train_inputs = to_input_matrix(train_set);
  const Matrix train_targets = to_target_matrix(train_set);
  const Matrix val_inputs = to_input_matrix(val_set);
  const Matrix val_targets = to_target_matrix(val_set);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam = make_adam_state(model, adam_cfg);
  Rng dropout_rng = stream_rng(cfg.seed, StreamKind::kDropout);

  TrainHistory history;
  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;

  std::vector<int> order(train_set.count);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng = stream_rng(cfg.seed, StreamKind::kShuffle, 0, epoch);
    for (int i = train_set.count - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

    model.mode = Mode::kTrain;
    double epoch_loss = 0.0;
    int samples_used = 0;
    for (int start = 0; start < train_set.count; start += cfg.batch_size) {
      const int batch = std::min(cfg.batch_size, train_set.count - start);
      if (batch < 2) break;  // a trailing singleton has no batch statistics
      Matrix inputs(batch, model.input_dim);
      Matrix targets(batch, model.output_dim);
      for (int b = 0; b < batch; ++b) {
        inputs.row(b) = train_inputs.row(order[start + b]);
        targets.row(b) = train_targets.row(order[start + b]);
      }
      ForwardResult fwd = forward(model, inputs, Mode::kTrain, &dropout_rng);
      BalancedMseResult loss = balanced_mse(targets, fwd.outputs);
      if (!std::isfinite(loss.loss))
        throw TrainingDiverged("train: non-finite loss at epoch " +
                               std::to_string(epoch));
      GradientSet grads = backward(model, fwd.cache, loss.grad);
      adam_step(model, grads, adam);
      epoch_loss += loss.loss;
      samples_used += batch;
    }

    model.mode = Mode::kEval;
    const double val = validation_loss(model, val_targets, val_inputs);
    if (!std::isfinite(val))
      throw TrainingDiverged("train: non-finite validation loss at epoch " +
                             std::to_string(epoch));
    history.train_loss.push_back(epoch_loss / double(samples_used));
    history.val_loss.push_back(val);

    if (val < best_val) {
      best_val = val;
      best = model;
      history.best_epoch = epoch;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= cfg.patience) break;
    }
  }

  best.mode = Mode::kEval;
  return {std::move(best), std::move(history)};
}

Threshold calibrate_threshold(const MlpModel& model, const Dataset& val_set) {
  if (val_set.count == 0)
    throw InvalidArgument("calibrate_threshold: validation set is empty");
  const Matrix preds = eval_outputs(model, to_input_matrix(val_set));
  const int n = val_set.count;
  const int width = val_set.gen_config.items;

  struct Entry {
    double value;
    std::int32_t sample;
    std::uint8_t truth;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n) * width);
  std::vector<int> mismatches(n, 0);
  for (int i = 0; i < n; ++i) {
    const auto truth = val_set.signal(i);
    for (int j = 0; j < width; ++j) {
      entries.push_back({preds(i, j), i, truth[j]});
      mismatches[i] += truth[j];  // thresholding everything to 0 misses the ones
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.value > b.value; });

  int successes = static_cast<int>(std::count(mismatches.begin(), mismatches.end(), 0));
  // Sweep the threshold downward; entries flip to 1 as it passes their value.
  // Candidates are visited in strictly decreasing order, so accepting ties
  // yields the smallest optimal threshold.
  double best_tau = entries.front().value + 1.0;
  int best_successes = successes;
  std::size_t k = 0;
  while (k < entries.size()) {
    const double value = entries[k].value;
    while (k < entries.size() && entries[k].value == value) {
      const Entry& e = entries[k];
      const int before = mismatches[e.sample];
      mismatches[e.sample] += e.truth ? -1 : 1;
      if (before == 0) --successes;
      else if (mismatches[e.sample] == 0) ++successes;
      ++k;
    }
    const double tau = k < entries.size() ? 0.5 * (value + entries[k].value)
                                          : entries.back().value - 1.0;
    if (successes >= best_successes) {
      best_successes = successes;
      best_tau = tau;
    }
  }
  return Threshold{best_tau};
}

std::vector<std::uint8_t> decode(const MlpModel& model,
                                 std::span<const std::int32_t> measurement,
                                 Threshold threshold) {
  Vector input(measurement.size());
  for (std::size_t i = 0; i < measurement.size(); ++i)
    input[static_cast<Eigen::Index>(i)] = static_cast<double>(measurement[i]);
  const Vector scores = eval_sample(model, std::move(input));
  std::vector<std::uint8_t> bits(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    bits[j] = scores[j] >= threshold.value ? 1 : 0;
  return bits;
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_history_csv: cannot open " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < history.val_loss.size(); ++i)
    out << (i + 1) << "," << format_double(history.train_loss[i]) << ","
        << format_double(history.val_loss[i]) << "\n";
  if (!out) throw IoError("save_history_csv: write failed on " + path.string());
}

}  // namespace qgt
