#pragma once

#include <Eigen/Core>

#include "mmdq/kernel.hpp"
#include "mmdq/linalg.hpp"

namespace mmdq {

/// An independent pair (xi, xi') drawn from P x P.
struct CostSample {
  double xi = 0.0;
  double xi_prime = 0.0;
};

/// Which per-pair cost drives the point updates.
enum class CostVariant {
  Symmetric,   // c, two kernel solves per pair
  Asymmetric,  // c', one kernel solve per pair, same expectation
};

/// Cost value together with its gradient in the support points.
struct CostEvaluation {
  double value = 0.0;
  Eigen::VectorXd grad_points;
};

/// Symmetric product-space cost
///   c = k(xi, xi') - k(xi, x)^T K^-1 k(xi', x)
///       + (1 - 1^T K^-1 k(xi, x)) (1 - 1^T K^-1 k(xi', x)) / (1^T K^-1 1),
/// whose P x P expectation is the MMD^2 of the optimal sum-to-one weights.
double cost_c(const KernelSystem& sys, CostSample s);
double cost_c(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s);

/// Asymmetric variant
///   c' = k(xi, xi') - k(xi', x)^T K^-1 k(xi, x) + (1 - 1^T K^-1 k(xi, x))^2 / (1^T K^-1 1)
/// with E[c'] = E[c]; needs only the solve K w = k(xi, x).
double cost_c_prime(const KernelSystem& sys, CostSample s);
double cost_c_prime(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s);

/// Explicit-weight cost
///   c'' = k(xi, xi') - mu^T k(x, xi) - mu^T k(x, xi') + mu^T K mu.
/// No linear solve.
double cost_c_double_prime(const KernelSpec& spec, const Eigen::VectorXd& points,
                           const Eigen::VectorXd& mu, CostSample s);

/// Gradient of c in the support points, including the dependence of K^-1
/// and of 1^T K^-1 1 on the points.
Eigen::VectorXd grad_points_c(const KernelSystem& sys, CostSample s);
Eigen::VectorXd grad_points_c(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s);

/// Gradient of c' in the support points.
Eigen::VectorXd grad_points_c_prime(const KernelSystem& sys, CostSample s);

/// Value and gradient in one pass (shares the kernel solves).
CostEvaluation evaluate_cost(const KernelSystem& sys, CostSample s, CostVariant variant);

/// Gradients of c'' in the points and in the weights.
struct DoublePrimeGradient {
  double value = 0.0;
  Eigen::VectorXd grad_points;
  Eigen::VectorXd grad_weights;
};
DoublePrimeGradient evaluate_cost_double_prime(const KernelSpec& spec, const Eigen::VectorXd& points,
                                               const Eigen::VectorXd& mu, CostSample s);

/// Penalized objective c''(x, pi(mu), xi, xi') + ||mu - pi(mu)||_2, pi the
/// simplex projection.
double penalized_objective(const KernelSpec& spec, const Eigen::VectorXd& points,
                           const Eigen::VectorXd& mu, CostSample s);

}  // namespace mmdq
