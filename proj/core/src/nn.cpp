#include "qgt/nn.hpp"

#include <cmath>
#include <string>

#include "qgt/errors.hpp"

namespace qgt {

namespace {

Layer make_dense(int in_dim, int out_dim, Rng rng) {
  DenseLayer d;
  d.weight.resize(out_dim, in_dim);
  d.bias = Vector::Zero(out_dim);
  const double bound = std::sqrt(6.0 / (in_dim + out_dim));
  // Row-major draw order fixes the stream layout.
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) d.weight(r, c) = rng.uniform_real(-bound, bound);
  return Layer{in_dim, out_dim, std::move(d)};
}

Layer make_leaky(int dim) { return Layer{dim, dim, LeakyReluLayer{}}; }

Layer make_batchnorm(int dim) {
  BatchNormLayer b;
  b.gain = Vector::Ones(dim);
  b.shift = Vector::Zero(dim);
  b.running_mean = Vector::Zero(dim);
  b.running_var = Vector::Ones(dim);
  return Layer{dim, dim, std::move(b)};
}

Layer make_dropout(int dim, double drop_prob) {
  return Layer{dim, dim, DropoutLayer{1.0 - drop_prob}};
}

inline double leaky_slope_at(double pre_activation, double negative_slope) {
  return pre_activation > 0.0 ? 1.0 : negative_slope;
}

}  // namespace

MlpModel build_model(int input_dim, int output_dim, const std::vector<int>& hidden,
                     std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1)
    throw InvalidArgument("build_model: dimensions must be >= 1");
  for (const int width : hidden)
    if (width < 1) throw InvalidArgument("build_model: hidden widths must be >= 1");

  MlpModel m;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  m.hidden = hidden;
  int prev = input_dim;
  std::uint64_t dense_index = 0;
  for (const int width : hidden) {
    m.layers.push_back(make_dense(
        prev, width, stream_rng(seed, StreamKind::kWeightInit, 0, dense_index++)));
    m.layers.push_back(make_leaky(width));
    m.layers.push_back(make_batchnorm(width));
    m.layers.push_back(make_dropout(width, 0.1));
    prev = width;
  }
  m.layers.push_back(make_dense(
      prev, output_dim, stream_rng(seed, StreamKind::kWeightInit, 0, dense_index)));
  m.mode = Mode::kEval;
  return m;
}

ForwardResult forward(MlpModel& model, const Matrix& batch, Mode mode,
                      Rng* dropout_rng) {
  if (batch.cols() != model.input_dim)
    throw InvalidArgument("forward: batch width " + std::to_string(batch.cols()) +
                          " does not match input dim " +
                          std::to_string(model.input_dim));
  if (mode == Mode::kTrain && batch.rows() < 2)
    throw InvalidArgument("forward: train mode needs a batch of at least 2 samples");

  ForwardResult result;
  result.cache.mode = mode;
  result.cache.batch_rows = batch.rows();

  if (mode == Mode::kEval) {
    result.outputs = eval_outputs(model, batch);
    return result;
  }

  const auto rows = batch.rows();
  Matrix h = batch;
  result.cache.layers.resize(model.layers.size());
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    Layer& layer = model.layers[li];
    LayerCache& cache = result.cache.layers[li];
    switch (layer.kind()) {
      case LayerKind::kDense: {
        const DenseLayer& d = layer.dense();
        cache.input = h;
        Matrix out(rows, layer.out_dim);
        out.noalias() = h * d.weight.transpose();
        out.rowwise() += d.bias.transpose();
        h = std::move(out);
        break;
      }
      case LayerKind::kLeakyRelu: {
        const double slope = layer.leaky().negative_slope;
        cache.input = h;
        h = h.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        break;
      }
      case LayerKind::kBatchNorm: {
        BatchNormLayer& b = layer.batchnorm();
        const double inv_rows = 1.0 / static_cast<double>(rows);
        Eigen::RowVectorXd mean = h.colwise().mean();
        Matrix centered = h.rowwise() - mean;
        Eigen::RowVectorXd var =
            centered.array().square().colwise().sum() * inv_rows;  // biased
        Eigen::RowVectorXd inv_std = (var.array() + b.epsilon).rsqrt();
        cache.normalized = centered.array().rowwise() * inv_std.array();
        cache.inv_std = inv_std.transpose();
        h = cache.normalized.array().rowwise() * b.gain.transpose().array();
        h.array().rowwise() += b.shift.transpose().array();
        // Running stats track the unbiased variance estimate.
        const double unbias =
            static_cast<double>(rows) / static_cast<double>(rows - 1);
        b.running_mean = (1.0 - b.momentum) * b.running_mean + b.momentum * mean.transpose();
        b.running_var =
            (1.0 - b.momentum) * b.running_var + (b.momentum * unbias) * var.transpose();
        break;
      }
      case LayerKind::kDropout: {
        const double keep = layer.dropout().keep_prob;
        if (keep < 1.0) {
          if (dropout_rng == nullptr)
            throw InvalidArgument("forward: train mode with dropout needs an rng");
          cache.mask.resize(rows, layer.out_dim);
          const double scale = 1.0 / keep;
          for (Eigen::Index r = 0; r < rows; ++r)
            for (int c = 0; c < layer.out_dim; ++c)
              cache.mask(r, c) = dropout_rng->bernoulli(keep) ? scale : 0.0;
          h = h.cwiseProduct(cache.mask);
        } else {
          cache.mask = Matrix::Ones(rows, layer.out_dim);
        }
        break;
      }
    }
  }
  result.outputs = std::move(h);
  return result;
}

Vector eval_sample(const MlpModel& model, Vector activation) {
  for (const Layer& layer : model.layers) {
    switch (layer.kind()) {
      case LayerKind::kDense: {
        const DenseLayer& d = layer.dense();
        Vector out(layer.out_dim);
        out.noalias() = d.weight * activation;
        out += d.bias;
        activation = std::move(out);
        break;
      }
      case LayerKind::kLeakyRelu: {
        const double slope = layer.leaky().negative_slope;
        activation = activation.unaryExpr(
            [slope](double v) { return v > 0.0 ? v : slope * v; });
        break;
      }
      case LayerKind::kBatchNorm: {
        const BatchNormLayer& b = layer.batchnorm();
        const auto inv_std = (b.running_var.array() + b.epsilon).rsqrt();
        activation = ((activation - b.running_mean).array() * inv_std * b.gain.array() +
                      b.shift.array())
                         .matrix();
        break;
      }
      case LayerKind::kDropout:
        break;  // identity in eval mode
    }
  }
  return activation;
}

Matrix eval_outputs(const MlpModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim)
    throw InvalidArgument("eval_outputs: batch width does not match input dim");
  Matrix out(batch.rows(), model.output_dim);
  // One sample at a time through the same kernel so results cannot depend
  // on the batching.
  for (Eigen::Index r = 0; r < batch.rows(); ++r)
    out.row(r) = eval_sample(model, batch.row(r).transpose()).transpose();
  return out;
}

GradientSet backward(const MlpModel& model, const ForwardCache& cache,
                     const Matrix& output_grad) {
  if (cache.mode != Mode::kTrain)
    throw InvalidState("backward: cache must come from a train-mode forward pass");
  if (cache.layers.size() != model.layers.size())
    throw InvalidState("backward: cache does not match the model");
  if (output_grad.rows() != cache.batch_rows || output_grad.cols() != model.output_dim)
    throw InvalidArgument("backward: output_grad shape mismatch");

  GradientSet grads;
  grads.layers.resize(model.layers.size());
  Matrix d = output_grad;
  for (std::size_t idx = model.layers.size(); idx-- > 0;) {
    const Layer& layer = model.layers[idx];
    const LayerCache& lc = cache.layers[idx];
    LayerGrads& lg = grads.layers[idx];
    switch (layer.kind()) {
      case LayerKind::kDense: {
        const DenseLayer& dense = layer.dense();
        if (lc.input.rows() != cache.batch_rows || lc.input.cols() != layer.in_dim)
          throw InvalidState("backward: stale dense cache");
        lg.weight.resize(layer.out_dim, layer.in_dim);
        lg.weight.noalias() = d.transpose() * lc.input;
        lg.bias = d.colwise().sum().transpose();
        Matrix dx(cache.batch_rows, layer.in_dim);
        dx.noalias() = d * dense.weight;
        d = std::move(dx);
        break;
      }
      case LayerKind::kLeakyRelu: {
        const double slope = layer.leaky().negative_slope;
        if (lc.input.rows() != cache.batch_rows)
          throw InvalidState("backward: stale activation cache");
        d = d.cwiseProduct(lc.input.unaryExpr(
            [slope](double v) { return leaky_slope_at(v, slope); }));
        break;
      }
      case LayerKind::kBatchNorm: {
        const BatchNormLayer& b = layer.batchnorm();
        if (lc.normalized.rows() != cache.batch_rows)
          throw InvalidState("backward: stale batchnorm cache");
        const double inv_rows = 1.0 / static_cast<double>(cache.batch_rows);
        lg.gain = d.cwiseProduct(lc.normalized).colwise().sum().transpose();
        lg.shift = d.colwise().sum().transpose();
        // Gradient through the batch statistics themselves.
        Matrix d_norm = d.array().rowwise() * b.gain.transpose().array();
        Eigen::RowVectorXd sum_d = d_norm.colwise().sum();
        Eigen::RowVectorXd sum_dx =
            d_norm.cwiseProduct(lc.normalized).colwise().sum();
        Matrix dx = d_norm;
        dx.array().rowwise() -= inv_rows * sum_d.array();
        dx.array() -= lc.normalized.array().rowwise() * (inv_rows * sum_dx.array());
        dx.array().rowwise() *= lc.inv_std.transpose().array();
        d = std::move(dx);
        break;
      }
      case LayerKind::kDropout: {
        if (lc.mask.rows() != cache.batch_rows)
          throw InvalidState("backward: stale dropout cache");
        d = d.cwiseProduct(lc.mask);
        break;
      }
    }
  }
  return grads;
}

AdamState make_adam_state(const MlpModel& model, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.first_moment.resize(model.layers.size());
  state.second_moment.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    if (layer.kind() == LayerKind::kDense) {
      state.first_moment[i].weight = Matrix::Zero(layer.out_dim, layer.in_dim);
      state.first_moment[i].bias = Vector::Zero(layer.out_dim);
      state.second_moment[i].weight = Matrix::Zero(layer.out_dim, layer.in_dim);
      state.second_moment[i].bias = Vector::Zero(layer.out_dim);
    } else if (layer.kind() == LayerKind::kBatchNorm) {
      state.first_moment[i].gain = Vector::Zero(layer.out_dim);
      state.first_moment[i].shift = Vector::Zero(layer.out_dim);
      state.second_moment[i].gain = Vector::Zero(layer.out_dim);
      state.second_moment[i].shift = Vector::Zero(layer.out_dim);
    }
  }
  return state;
}

namespace {

template <typename Array>
void adam_update(Array& param, const Array& grad, Array& m, Array& v,
                 const AdamConfig& cfg, double bias1, double bias2) {
  if (!grad.allFinite()) throw TrainingDiverged("adam_step: non-finite gradient");
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square();
  param.array() -= cfg.learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + cfg.epsilon);
}

}  // namespace

void adam_step(MlpModel& model, const GradientSet& grads, AdamState& state) {
  if (grads.layers.size() != model.layers.size())
    throw InvalidArgument("adam_step: gradient set does not match the model");
  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.config.beta1, double(state.step));
  const double bias2 = 1.0 - std::pow(state.config.beta2, double(state.step));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Layer& layer = model.layers[i];
    const LayerGrads& g = grads.layers[i];
    LayerGrads& m = state.first_moment[i];
    LayerGrads& v = state.second_moment[i];
    if (layer.kind() == LayerKind::kDense) {
      if (g.weight.rows() != layer.out_dim || g.weight.cols() != layer.in_dim)
        throw InvalidArgument("adam_step: dense gradient shape mismatch");
      adam_update(layer.dense().weight, g.weight, m.weight, v.weight, state.config,
                  bias1, bias2);
      adam_update(layer.dense().bias, g.bias, m.bias, v.bias, state.config, bias1,
                  bias2);
    } else if (layer.kind() == LayerKind::kBatchNorm) {
      if (g.gain.size() != layer.out_dim)
        throw InvalidArgument("adam_step: batchnorm gradient shape mismatch");
      adam_update(layer.batchnorm().gain, g.gain, m.gain, v.gain, state.config,
                  bias1, bias2);
      adam_update(layer.batchnorm().shift, g.shift, m.shift, v.shift, state.config,
                  bias1, bias2);
    }
  }
}

Matrix jacobian(const MlpModel& model, std::span<const std::int32_t> measurement) {
  Vector input(measurement.size());
  for (std::size_t i = 0; i < measurement.size(); ++i)
    input[static_cast<Eigen::Index>(i)] = static_cast<double>(measurement[i]);
  return jacobian(model, input);
}

Matrix jacobian(const MlpModel& model, const Vector& input) {
  if (model.mode != Mode::kEval)
    throw InvalidState("jacobian: model must be in eval mode");
  if (input.size() != model.input_dim)
    throw InvalidArgument("jacobian: input length does not match input dim");

  // Push the identity forward: after each layer, sensitivity holds
  // d(activation)/d(input), a (dim x input_dim) matrix.
  Vector activation = input;
  Matrix sensitivity = Matrix::Identity(model.input_dim, model.input_dim);
  for (const Layer& layer : model.layers) {
    switch (layer.kind()) {
      case LayerKind::kDense: {
        const DenseLayer& d = layer.dense();
        Matrix next(layer.out_dim, model.input_dim);
        next.noalias() = d.weight * sensitivity;
        sensitivity = std::move(next);
        Vector out(layer.out_dim);
        out.noalias() = d.weight * activation;
        out += d.bias;
        activation = std::move(out);
        break;
      }
      case LayerKind::kLeakyRelu: {
        const double slope = layer.leaky().negative_slope;
        for (int i = 0; i < layer.out_dim; ++i)
          sensitivity.row(i) *= leaky_slope_at(activation[i], slope);
        activation = activation.unaryExpr(
            [slope](double v) { return v > 0.0 ? v : slope * v; });
        break;
      }
      case LayerKind::kBatchNorm: {
        const BatchNormLayer& b = layer.batchnorm();
        const Vector scale =
            (b.gain.array() * (b.running_var.array() + b.epsilon).rsqrt()).matrix();
        sensitivity.array().colwise() *= scale.array();
        activation = ((activation - b.running_mean).array() *
                          (b.running_var.array() + b.epsilon).rsqrt() *
                          b.gain.array() +
                      b.shift.array())
                         .matrix();
        break;
      }
      case LayerKind::kDropout:
        break;
    }
  }
  return sensitivity;  // output_dim x input_dim
}

Matrix jacobian_reverse_mode(const MlpModel& model, const Vector& input) {
  if (model.mode != Mode::kEval)
    throw InvalidState("jacobian_reverse_mode: model must be in eval mode");
  if (input.size() != model.input_dim)
    throw InvalidArgument("jacobian_reverse_mode: input length mismatch");

  // Record eval-mode layer inputs once.
  std::vector<Vector> layer_inputs;
  layer_inputs.reserve(model.layers.size());
  Vector activation = input;
  for (const Layer& layer : model.layers) {
    layer_inputs.push_back(activation);
    switch (layer.kind()) {
      case LayerKind::kDense: {
        const DenseLayer& d = layer.dense();
        Vector out(layer.out_dim);
        out.noalias() = d.weight * activation;
        out += d.bias;
        activation = std::move(out);
        break;
      }
      case LayerKind::kLeakyRelu: {
        const double slope = layer.leaky().negative_slope;
        activation = activation.unaryExpr(
            [slope](double v) { return v > 0.0 ? v : slope * v; });
        break;
      }
      case LayerKind::kBatchNorm: {
        const BatchNormLayer& b = layer.batchnorm();
        activation = ((activation - b.running_mean).array() *
                          (b.running_var.array() + b.epsilon).rsqrt() *
                          b.gain.array() +
                      b.shift.array())
                         .matrix();
        break;
      }
      case LayerKind::kDropout:
        break;
    }
  }

  Matrix result(model.output_dim, model.input_dim);
  for (int out_idx = 0; out_idx < model.output_dim; ++out_idx) {
    Vector g = Vector::Zero(model.output_dim);
    g[out_idx] = 1.0;
    for (std::size_t idx = model.layers.size(); idx-- > 0;) {
      const Layer& layer = model.layers[idx];
      const Vector& lin = layer_inputs[idx];
      switch (layer.kind()) {
        case LayerKind::kDense: {
          Vector prev(layer.in_dim);
          prev.noalias() = layer.dense().weight.transpose() * g;
          g = std::move(prev);
          break;
        }
        case LayerKind::kLeakyRelu: {
          const double slope = layer.leaky().negative_slope;
          for (int i = 0; i < layer.in_dim; ++i)
            g[i] *= leaky_slope_at(lin[i], slope);
          break;
        }
        case LayerKind::kBatchNorm: {
          const BatchNormLayer& b = layer.batchnorm();
          g.array() *= b.gain.array() * (b.running_var.array() + b.epsilon).rsqrt();
          break;
        }
        case LayerKind::kDropout:
          break;
      }
    }
    result.row(out_idx) = g.transpose();
  }
  return result;
}

}  // namespace qgt
