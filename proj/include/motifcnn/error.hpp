#pragma once

#include <stdexcept>
#include <string>

namespace motifcnn {

/// Invalid sizes, labels, or configuration values. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver failure, divergence, or a residual outside its certificate. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request exceeds a configured memory cap.
class CapacityError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace motifcnn
