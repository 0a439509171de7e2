#pragma once

#include <string>
#include <vector>

#include "qgt/dataset.hpp"
#include "qgt/forward_model.hpp"
#include "qgt/matrix.hpp"
#include "qgt/nn.hpp"

namespace qgt {

// Local sensitivities of the decoder at a set of test inputs; each matrix
// is items x pools.
struct JacobianBatch {
  std::vector<Matrix> matrices;
  std::string source;
};

JacobianBatch collect_jacobians(const MlpModel& model,
                                const std::vector<Measurement>& inputs, int count);
JacobianBatch collect_jacobians(const MlpModel& model, const Dataset& test_set,
                                int count);

// Continuous-valued pooling estimate (pools x items).
struct RelaxedEstimate {
  Matrix values;
};

struct RelaxedSolution {
  RelaxedEstimate estimate;
  bool ridge_applied = false;
  double condition_estimate = 0.0;  // of the raw Gram matrix
  double ridge_lambda = 0.0;
};

// Minimizer of sum_i ||I - C * B_i||_F^2 over real C via the normal
// equations C * (sum B_i B_i^T) = sum B_i^T, solved with a stable
// factorization. A ridge term kicks in when the Gram matrix's condition
// estimate exceeds 1e12.
RelaxedSolution solve_relaxed(const JacobianBatch& batch);

// The objective above, for certificates and diagnostics.
double alignment_objective(const Matrix& candidate, const JacobianBatch& batch);

struct RecoveredPooling {
  PoolingMatrix values;
  double centroid_low = 0.0;
  double centroid_high = 0.0;
};

// Exact two-means over all entries (in one dimension the optimal partition
// is a threshold on the sorted values); the cluster with the smaller
// centroid maps to 0.
RecoveredPooling binarize_kmeans(const RelaxedEstimate& estimate);

// Percentage of mismatched entries.
double structural_error(const RecoveredPooling& recovered, const PoolingMatrix& truth);

}  // namespace qgt
