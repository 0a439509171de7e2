#pragma once

// Independent reference implementations used to check the library. These
// deliberately avoid the production code paths: the measurement oracle is a
// naive triple loop, the alignment minimizer is plain gradient descent on
// the objective, the clustering oracle scans every contiguous split, and
// gradients come from central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "qgt/forward_model.hpp"
#include "qgt/matrix.hpp"
#include "qgt/nn.hpp"
#include "qgt/verify.hpp"

namespace qgt::testing {

// --------------------------------------------------------------------------
// Forward-model oracle
// --------------------------------------------------------------------------

inline std::vector<std::int32_t> measure_oracle(const PoolingMatrix& a,
                                                std::span<const std::uint8_t> x,
                                                std::span<const std::int32_t> eta) {
  std::vector<std::int32_t> y(a.pools, 0);
  for (int i = 0; i < a.pools; ++i) {
    for (int j = 0; j < a.items; ++j)
      if (a.at(i, j) != 0 && x[j] != 0) y[i] += 1;
    y[i] += eta[i];
  }
  return y;
}

// --------------------------------------------------------------------------
// Parameter enumeration for finite-difference gradient checks
// --------------------------------------------------------------------------

struct ParamRef {
  double* value;
  double analytic;  // matching entry of a GradientSet
};

inline std::vector<ParamRef> parameter_refs(MlpModel& model, const GradientSet& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    Layer& layer = model.layers[li];
    const LayerGrads& g = grads.layers[li];
    if (layer.kind() == LayerKind::kDense) {
      DenseLayer& d = layer.dense();
      for (Eigen::Index i = 0; i < d.weight.size(); ++i)
        refs.push_back({d.weight.data() + i, g.weight.data()[i]});
      for (Eigen::Index i = 0; i < d.bias.size(); ++i)
        refs.push_back({d.bias.data() + i, g.bias[i]});
    } else if (layer.kind() == LayerKind::kBatchNorm) {
      BatchNormLayer& b = layer.batchnorm();
      for (Eigen::Index i = 0; i < b.gain.size(); ++i)
        refs.push_back({b.gain.data() + i, g.gain[i]});
      for (Eigen::Index i = 0; i < b.shift.size(); ++i)
        refs.push_back({b.shift.data() + i, g.shift[i]});
    }
  }
  return refs;
}

// Central finite difference of an arbitrary scalar functional of the model.
inline double central_difference(double* param, double h,
                                 const std::function<double()>& eval) {
  const double saved = *param;
  *param = saved + h;
  const double up = eval();
  *param = saved - h;
  const double down = eval();
  *param = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-2) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// --------------------------------------------------------------------------
// Alignment-objective minimizer (gradient descent, no normal equations)
// --------------------------------------------------------------------------

inline Matrix gd_minimize_alignment(const JacobianBatch& batch, int iterations,
                                    double step) {
  const auto n = batch.matrices.front().rows();
  const auto m = batch.matrices.front().cols();
  Matrix c = Matrix::Zero(m, n);
  const Matrix identity = Matrix::Identity(m, m);
  for (int it = 0; it < iterations; ++it) {
    Matrix grad = Matrix::Zero(m, n);
    for (const Matrix& b : batch.matrices)
      grad.noalias() += -2.0 * (identity - c * b) * b.transpose();
    c -= step * grad;
  }
  return c;
}

// A safe step size: 1 / (2 * sum of squared norms) lower-bounds 1/L.
inline double gd_step_for(const JacobianBatch& batch) {
  double total = 0.0;
  for (const Matrix& b : batch.matrices) total += b.squaredNorm();
  return 0.5 / total;
}

// --------------------------------------------------------------------------
// Exhaustive 1-D two-cluster oracle
// --------------------------------------------------------------------------

// Optimal two-cluster labels by brute force: every midpoint between
// consecutive sorted values is tried as a threshold, and each candidate
// partition's objective is recomputed from scratch (means first, then the
// within-cluster squared error). Label 1 marks the upper cluster.
inline std::vector<std::uint8_t> two_cluster_oracle(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());

  double best = std::numeric_limits<double>::infinity();
  double best_threshold = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (sorted[k] == sorted[k + 1]) continue;
    const double threshold = 0.5 * (sorted[k] + sorted[k + 1]);
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (const double v : values) {
      if (v <= threshold) {
        sum_lo += v;
        ++n_lo;
      } else {
        sum_hi += v;
        ++n_hi;
      }
    }
    const double mean_lo = sum_lo / double(n_lo);
    const double mean_hi = sum_hi / double(n_hi);
    double sse = 0.0;
    for (const double v : values) {
      const double d = v - (v <= threshold ? mean_lo : mean_hi);
      sse += d * d;
    }
    if (sse < best) {
      best = sse;
      best_threshold = threshold;
    }
  }
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) labels[i] = values[i] > best_threshold;
  return labels;
}

// --------------------------------------------------------------------------
// Scalar Adam recurrence (hand-rolled trace)
// --------------------------------------------------------------------------

struct ScalarAdamTrace {
  double param;
  double m = 0.0;
  double v = 0.0;
  long step = 0;

  void apply(double grad, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
             double eps = 1e-8) {
    step += 1;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double m_hat = m / (1.0 - std::pow(beta1, double(step)));
    const double v_hat = v / (1.0 - std::pow(beta2, double(step)));
    param -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
};

}  // namespace qgt::testing
