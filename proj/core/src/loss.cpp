#include "qgt/loss.hpp"

#include "qgt/errors.hpp"

namespace qgt {

BalancedMseResult balanced_mse(const Matrix& targets, const Matrix& preds) {
  if (targets.rows() != preds.rows() || targets.cols() != preds.cols())
    throw InvalidArgument("balanced_mse: shape mismatch");
  const auto rows = targets.rows();
  const auto cols = targets.cols();

  BalancedMseResult result;
  result.grad = Matrix::Zero(rows, cols);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index ones = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double t = targets(i, j);
      if (t == 1.0) ++ones;
      else if (t != 0.0)
        throw InvalidArgument("balanced_mse: targets must be exactly 0 or 1");
    }
    const Eigen::Index zeros = cols - ones;
    double sse_one = 0.0, sse_zero = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double r = preds(i, j) - targets(i, j);
      if (targets(i, j) == 1.0) sse_one += r * r;
      else sse_zero += r * r;
    }
    if (ones > 0) loss += 0.5 * sse_one / double(ones);
    if (zeros > 0) loss += 0.5 * sse_zero / double(zeros);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double r = preds(i, j) - targets(i, j);
      const Eigen::Index members = targets(i, j) == 1.0 ? ones : zeros;
      result.grad(i, j) = r / double(members);  // members > 0 for any occupied class
    }
  }
  result.loss = loss;
  return result;
}

double balanced_mse_mean(const Matrix& targets, const Matrix& preds) {
  if (targets.rows() == 0) throw InvalidArgument("balanced_mse_mean: empty batch");
  return balanced_mse(targets, preds).loss / double(targets.rows());
}

}  // namespace qgt
