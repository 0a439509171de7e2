#pragma once

#include <stdexcept>

namespace qgt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad caller input: dimension mismatch, out-of-range parameter, empty input.
struct InvalidArgument : Error {
  using Error::Error;
};

// Operation invoked in the wrong mode or with a stale forward cache.
struct InvalidState : Error {
  using Error::Error;
};

// Non-finite loss or gradients encountered during optimization.
struct TrainingDiverged : Error {
  using Error::Error;
};

// Gram matrix not invertible even after the ridge fallback.
struct SingularSystem : Error {
  using Error::Error;
};

// Two-cluster binarization asked to split a constant matrix.
struct DegenerateClustering : Error {
  using Error::Error;
};

// Malformed configuration file or inconsistent experiment settings.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failures (unwritable output directory, truncated dataset file).
struct IoError : Error {
  using Error::Error;
};

}  // namespace qgt
