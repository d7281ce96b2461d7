#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace msa {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: wrong shapes, non-symmetric matrices, invalid configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of a matrix function (e.g. log of a matrix with
/// a non-positive eigenvalue).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure on otherwise valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before reaching its tolerance. Carries the
/// last iterate and the residual it had reached.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate,
                   double residual)
      : NumericalError(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}

  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Eigen::MatrixXd last_iterate_;
  double residual_;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs the sink for non-fatal numerical warnings (eigenvalue clamping,
/// missing target labels, ...). Returns the previous handler. The default
/// handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace msa
