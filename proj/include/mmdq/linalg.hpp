#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mmdq/kernel.hpp"

namespace mmdq {

/// Cholesky factor of a symmetric positive-definite matrix A + jitter * I.
///
/// Jitter escalates geometrically over {0, 1e-12, 1e-11, ...} * max diag and
/// stops at 1e-6 * max diag; beyond that IllConditioned is thrown.
class SpdFactor {
 public:
  explicit SpdFactor(const Eigen::MatrixXd& a);

  Eigen::Index size() const noexcept { return llt_.rows(); }
  double jitter() const noexcept { return jitter_; }
  double log_det() const noexcept { return log_det_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const noexcept { return llt_; }

  /// Cholesky solve followed by one step of iterative refinement against the
  /// factored matrix.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd a_;  // the matrix actually factored, jitter included
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
};

/// Solution of the bordered system [[K, 1], [1^T, 0]] [p; lambda/2] = [m; 1].
struct BorderedSolution {
  Eigen::VectorXd p;
  double lambda_half = 0.0;
};

/// Factorized kernel matrix for a fixed set of support points. Immutable.
class KernelSystem {
 public:
  /// Throws DegeneratePoints for coincident points and IllConditioned when
  /// the factorization fails at the jitter ceiling.
  KernelSystem(const KernelSpec& spec, Eigen::VectorXd points);

  const KernelSpec& spec() const noexcept { return spec_; }
  const Eigen::VectorXd& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.size(); }

  /// K without jitter.
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const SpdFactor& factor() const noexcept { return factor_; }
  double jitter() const noexcept { return factor_.jitter(); }
  double log_det() const noexcept { return factor_.log_det(); }

  /// w with (K + jitter I) w = rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  /// Weights with K p + (lambda/2) 1 = m and 1^T p = 1, via the Schur
  /// complement 1^T K^-1 1.
  BorderedSolution solve_bordered(const Eigen::VectorXd& m) const;

  /// K^-1 1 and 1^T K^-1 1.
  const Eigen::VectorXd& inv_ones() const noexcept { return inv_ones_; }
  double ones_inv_ones() const noexcept { return ones_inv_ones_; }

 private:
  KernelSpec spec_;
  Eigen::VectorXd points_;
  Eigen::MatrixXd matrix_;
  SpdFactor factor_;
  Eigen::VectorXd inv_ones_;
  double ones_inv_ones_ = 0.0;
};

KernelSystem build_system(const KernelSpec& spec, const Eigen::VectorXd& points);

/// Throws DegeneratePoints if two entries are equal.
void require_distinct(const Eigen::VectorXd& points);

/// Smallest gap between sorted entries (+inf for fewer than two).
double min_gap(const Eigen::VectorXd& points);

}  // namespace mmdq
