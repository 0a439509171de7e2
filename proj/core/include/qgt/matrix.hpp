#pragma once

#include <Eigen/Core>

namespace qgt {

// Row-major so that flattened parameter arrays serialize in natural
// reading order and per-sample rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace qgt
