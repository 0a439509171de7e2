#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qgt/matrix.hpp"
#include "qgt/rng.hpp"

namespace qgt {

enum class Mode { kTrain, kEval };

// ---------------------------------------------------------------------------
// Layers. A hidden block is dense -> leaky_relu -> batchnorm -> dropout;
// the output layer is a bare dense map.
// ---------------------------------------------------------------------------

struct DenseLayer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
};

struct LeakyReluLayer {
  double negative_slope = 0.01;
};

struct BatchNormLayer {
  Vector gain;
  Vector shift;
  Vector running_mean;
  Vector running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

struct DropoutLayer {
  // Inverted scaling: train-time activations are divided by keep_prob so
  // eval mode is the identity.
  double keep_prob = 0.9;
};

enum class LayerKind { kDense, kLeakyRelu, kBatchNorm, kDropout };

struct Layer {
  int in_dim = 0;
  int out_dim = 0;
  std::variant<DenseLayer, LeakyReluLayer, BatchNormLayer, DropoutLayer> params;

  LayerKind kind() const { return static_cast<LayerKind>(params.index()); }
  DenseLayer& dense() { return std::get<DenseLayer>(params); }
  const DenseLayer& dense() const { return std::get<DenseLayer>(params); }
  BatchNormLayer& batchnorm() { return std::get<BatchNormLayer>(params); }
  const BatchNormLayer& batchnorm() const { return std::get<BatchNormLayer>(params); }
  const LeakyReluLayer& leaky() const { return std::get<LeakyReluLayer>(params); }
  const DropoutLayer& dropout() const { return std::get<DropoutLayer>(params); }
};

struct MlpModel {
  std::vector<Layer> layers;
  int input_dim = 0;
  int output_dim = 0;
  Mode mode = Mode::kEval;
  std::vector<int> hidden;  // architecture descriptor
  std::optional<int> complexity_level;
};

// Glorot-uniform dense weights, zero biases, unit batchnorm, deterministic
// per seed. An empty hidden list yields a single linear map.
MlpModel build_model(int input_dim, int output_dim, const std::vector<int>& hidden,
                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct LayerCache {
  Matrix input;       // dense, leaky_relu: the layer's input
  Matrix normalized;  // batchnorm: standardized activations
  Vector inv_std;     // batchnorm: 1/sqrt(batch var + eps)
  Matrix mask;        // dropout: 0 or 1/keep_prob per entry
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  Eigen::Index batch_rows = 0;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  Matrix outputs;  // batch x output_dim
  ForwardCache cache;
};

// Train mode uses batch statistics (updating the running ones) and consumes
// dropout_rng for inverted-scaling masks; it needs a batch of at least two
// rows. Eval mode uses running statistics, identity dropout, and computes
// each sample independently, so per-sample results do not depend on how the
// batch was chunked.
ForwardResult forward(MlpModel& model, const Matrix& batch, Mode mode,
                      Rng* dropout_rng = nullptr);

// Eval-mode outputs without a cache; safe for concurrent use.
Matrix eval_outputs(const MlpModel& model, const Matrix& batch);
Vector eval_sample(const MlpModel& model, Vector activation);

struct LayerGrads {
  Matrix weight;  // dense
  Vector bias;    // dense
  Vector gain;    // batchnorm
  Vector shift;   // batchnorm
};

struct GradientSet {
  std::vector<LayerGrads> layers;
};

// Exact reverse-mode gradients of the scalar whose d(scalar)/d(outputs) is
// output_grad. Requires the cache of a matching train-mode forward call.
GradientSet backward(const MlpModel& model, const ForwardCache& cache,
                     const Matrix& output_grad);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<LayerGrads> first_moment;
  std::vector<LayerGrads> second_moment;
};

AdamState make_adam_state(const MlpModel& model, const AdamConfig& config);

// Standard bias-corrected Adam update, in place. Throws TrainingDiverged on
// non-finite gradients.
void adam_step(MlpModel& model, const GradientSet& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

// d(output)/d(input) of the eval-mode network at the given measurement,
// computed by pushing identity columns forward through the layer chain.
// Output row j is the gradient of output j. Requires eval mode.
Matrix jacobian(const MlpModel& model, std::span<const std::int32_t> measurement);
Matrix jacobian(const MlpModel& model, const Vector& input);

// Same object via output_dim reverse-mode passes, one standard basis vector
// per output. Kept as an independent route for cross-checking.
Matrix jacobian_reverse_mode(const MlpModel& model, const Vector& input);

}  // namespace qgt
