#pragma once

#include "qgt/matrix.hpp"

namespace qgt {

struct BalancedMseResult {
  double loss = 0.0;
  Matrix grad;  // d(loss)/d(preds), same shape as preds
};

// Class-balanced squared error, summed over the batch: each sample
// contributes half of (mean squared error over its defective coordinates
// plus mean squared error over its non-defective ones). A class with no
// members contributes nothing, which keeps all-zero (or all-one) samples
// well defined.
BalancedMseResult balanced_mse(const Matrix& targets, const Matrix& preds);

// Per-sample mean of the same loss; used for epoch-level reporting and
// early stopping.
double balanced_mse_mean(const Matrix& targets, const Matrix& preds);

}  // namespace qgt
