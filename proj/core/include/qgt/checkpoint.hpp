#pragma once

#include <filesystem>
#include <optional>

#include "qgt/dataset.hpp"
#include "qgt/nn.hpp"
#include "qgt/trainer.hpp"

namespace qgt {

// Trained decoder plus everything needed to reproduce and apply it: the
// generating config of its training data, the calibrated threshold once
// known, and the training settings.
struct Checkpoint {
  MlpModel model;
  GenConfig gen_config;
  std::optional<double> threshold;
  std::optional<TrainConfig> train_config;
};

// JSON document with per-parameter flat arrays; doubles round-trip exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qgt
