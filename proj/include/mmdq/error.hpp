#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mmdq {

/// Base class for numerical failures raised by the library. Invalid
/// arguments use the standard std::invalid_argument / std::domain_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two support points coincide, so the kernel matrix is singular.
class DegeneratePoints : public Error {
 public:
  using Error::Error;
};

/// Cholesky failed even at the jitter ceiling.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// The active-set iteration hit its iteration cap.
class ActiveSetCycle : public Error {
 public:
  ActiveSetCycle(const std::string& what, Eigen::VectorXd last_weights)
      : Error(what), last_weights_(std::move(last_weights)) {}

  const Eigen::VectorXd& last_weights() const noexcept { return last_weights_; }

 private:
  Eigen::VectorXd last_weights_;
};

}  // namespace mmdq
