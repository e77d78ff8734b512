#pragma once

#include <optional>

#include <Eigen/Core>

#include "mmdq/kernel.hpp"
#include "mmdq/weights.hpp"

namespace mmdq {

/// Normal target N(mean, std^2) under the Gaussian kernel of bandwidth
/// kernel_ell. Every quantity below is exact; nothing is sampled.
struct NormalTargetSpec {
  double mean = 0.0;
  double std = 1.0;
  double kernel_ell = 0.5;

  void validate() const;
  KernelSpec kernel() const { return KernelSpec::gaussian(kernel_ell); }
};

/// P_k(x) = exp(-(x - mean)^2 / (2 (std^2 + ell^2))) / sqrt(2 pi (std^2 + ell^2)).
double embedding_at(const NormalTargetSpec& t, double x);
/// d P_k / dx = -(x - mean) / (std^2 + ell^2) * P_k(x).
double embedding_grad(const NormalTargetSpec& t, double x);
/// Double integral of k against P x P: 1 / sqrt(2 pi (2 std^2 + ell^2)).
double self_energy(const NormalTargetSpec& t);

/// MMD^2 at the optimal weights of the given kind (Signed or SumToOne).
double closed_mmd_sq(const NormalTargetSpec& t, const Eigen::VectorXd& points, WeightKind mode);

/// Gradient of closed_mmd_sq with respect to the points.
Eigen::VectorXd closed_mmd_grad(const NormalTargetSpec& t, const Eigen::VectorXd& points,
                                WeightKind mode);

struct DeterministicResult {
  Quantization quantization;
  double mmd = 0.0;  // sqrt of closed_mmd_sq at the returned points
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;  // false: line search failed or iteration cap hit
};

/// Gradient descent with backtracking (Armijo factor 1e-4) on closed_mmd_sq,
/// from normal quantiles at levels (i - 1/2) / n unless `init` is given.
/// Stops once the gradient norm is <= 1e-8 or after 10^4 iterations. A
/// failed line search counts as converged only if |grad|^2 <= 1e-12 max(1, |f|).
DeterministicResult deterministic_optimize(const NormalTargetSpec& t, int n, WeightKind mode,
                                           const std::optional<Eigen::VectorXd>& init = std::nullopt);

}  // namespace mmdq
