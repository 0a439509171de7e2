#include "qgt/verify.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qgt/errors.hpp"
#include "qgt/format.hpp"

namespace qgt {

JacobianBatch collect_jacobians(const MlpModel& model,
                                const std::vector<Measurement>& inputs, int count) {
  if (count < 1) throw InvalidArgument("collect_jacobians: count must be >= 1");
  if (static_cast<int>(inputs.size()) < count)
    throw InvalidArgument("collect_jacobians: only " + std::to_string(inputs.size()) +
                          " inputs available, need " + std::to_string(count));
  JacobianBatch batch;
  batch.matrices.reserve(count);
  for (int i = 0; i < count; ++i)
    batch.matrices.push_back(jacobian(model, inputs[i].values));
  batch.source = "measurement list, first " + std::to_string(count);
  return batch;
}

JacobianBatch collect_jacobians(const MlpModel& model, const Dataset& test_set,
                                int count) {
  if (count < 1) throw InvalidArgument("collect_jacobians: count must be >= 1");
  if (test_set.count < count)
    throw InvalidArgument("collect_jacobians: split holds " +
                          std::to_string(test_set.count) + " samples, need " +
                          std::to_string(count));
  JacobianBatch batch;
  batch.matrices.reserve(count);
  for (int i = 0; i < count; ++i)
    batch.matrices.push_back(jacobian(model, test_set.measurement(i)));
  batch.source = std::string(split_name(test_set.split)) + " split, first " +
                 std::to_string(count);
  return batch;
}

RelaxedSolution solve_relaxed(const JacobianBatch& batch) {
  if (batch.matrices.empty())
    throw InvalidArgument("solve_relaxed: empty jacobian batch");
  const auto n = batch.matrices.front().rows();  // items
  const auto m = batch.matrices.front().cols();  // pools
  for (const Matrix& b : batch.matrices)
    if (b.rows() != n || b.cols() != m)
      throw InvalidArgument("solve_relaxed: inconsistent jacobian shapes");

  Matrix gram = Matrix::Zero(n, n);
  Matrix rhs = Matrix::Zero(m, n);  // sum of transposes
  for (const Matrix& b : batch.matrices) {
    gram.noalias() += b * b.transpose();
    rhs.noalias() += b.transpose();
  }
  if (!gram.allFinite() || !rhs.allFinite())
    throw InvalidArgument("solve_relaxed: non-finite jacobian entries");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double eig_min = eig.eigenvalues().minCoeff();
  const double eig_max = eig.eigenvalues().maxCoeff();
  const double condition = eig_min > 0.0
                               ? eig_max / eig_min
                               : std::numeric_limits<double>::infinity();

  RelaxedSolution solution;
  solution.condition_estimate = condition;
  constexpr double kConditionLimit = 1e12;
  if (condition > kConditionLimit) {
    const double lambda = 1e-8 * gram.trace() / double(n);
    const double ridged_condition =
        lambda > 0.0 ? (eig_max + lambda) / (std::max(eig_min, 0.0) + lambda)
                     : std::numeric_limits<double>::infinity();
    if (!(lambda > 0.0) || ridged_condition > kConditionLimit)
      throw SingularSystem(
          "solve_relaxed: Gram matrix singular beyond ridge tolerance "
          "(condition estimate " +
          format_double(condition) + ")");
    gram.diagonal().array() += lambda;
    solution.ridge_applied = true;
    solution.ridge_lambda = lambda;
  }

  // C * gram = rhs with gram symmetric: factor once, solve for C^T.
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystem("solve_relaxed: factorization failed (condition estimate " +
                         format_double(condition) + ")");
  solution.estimate.values = ldlt.solve(rhs.transpose()).transpose();
  if (!solution.estimate.values.allFinite())
    throw SingularSystem("solve_relaxed: non-finite solution (condition estimate " +
                         format_double(condition) + ")");
  return solution;
}

double alignment_objective(const Matrix& candidate, const JacobianBatch& batch) {
  const auto m = candidate.rows();
  double total = 0.0;
  const Matrix identity = Matrix::Identity(m, m);
  for (const Matrix& b : batch.matrices)
    total += (identity - candidate * b).squaredNorm();
  return total;
}

RecoveredPooling binarize_kmeans(const RelaxedEstimate& estimate) {
  const Matrix& values = estimate.values;
  if (values.size() < 2)
    throw InvalidArgument("binarize_kmeans: estimate must hold at least 2 entries");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(lo < hi))
    throw DegenerateClustering("binarize_kmeans: all entries are equal");

  // Exact two-means in one dimension. The optimal partition is a threshold
  // on the sorted entries, so scanning every split with running prefix sums
  // finds the global minimum of the clustering objective. (Lloyd iterations
  // from a min/max start stall in local optima when the clusters overlap.)
  const auto total = static_cast<std::size_t>(values.size());
  const double* data = values.data();
  std::vector<std::uint32_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(),
            [data](std::uint32_t a, std::uint32_t b) { return data[a] < data[b]; });

  std::vector<double> prefix(total + 1, 0.0), prefix_sq(total + 1, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    prefix[i + 1] = prefix[i] + data[order[i]];
    prefix_sq[i + 1] = prefix_sq[i] + data[order[i]] * data[order[i]];
  }
  const auto cluster_sse = [&](std::size_t begin, std::size_t end) {  // [begin, end)
    const double count = double(end - begin);
    const double sum = prefix[end] - prefix[begin];
    return (prefix_sq[end] - prefix_sq[begin]) - sum * sum / count;
  };

  std::size_t best_split = 1;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t split = 1; split < total; ++split) {
    const double sse = cluster_sse(0, split) + cluster_sse(split, total);
    if (sse < best_sse) {
      best_sse = sse;
      best_split = split;
    }
  }

  RecoveredPooling recovered;
  recovered.centroid_low = prefix[best_split] / double(best_split);
  recovered.centroid_high =
      (prefix[total] - prefix[best_split]) / double(total - best_split);
  recovered.values.pools = static_cast<int>(values.rows());
  recovered.values.items = static_cast<int>(values.cols());
  recovered.values.entries.assign(total, 0);
  for (std::size_t i = best_split; i < total; ++i)
    recovered.values.entries[order[i]] = 1;
  return recovered;
}

double structural_error(const RecoveredPooling& recovered, const PoolingMatrix& truth) {
  if (recovered.values.pools != truth.pools || recovered.values.items != truth.items)
    throw InvalidArgument("structural_error: dimension mismatch");
  long mismatches = 0;
  for (std::size_t i = 0; i < truth.entries.size(); ++i)
    mismatches += recovered.values.entries[i] != truth.entries[i];
  return 100.0 * double(mismatches) / double(truth.entries.size());
}

}  // namespace qgt
