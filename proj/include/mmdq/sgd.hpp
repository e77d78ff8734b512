#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmdq/cost.hpp"
#include "mmdq/distributions.hpp"
#include "mmdq/kernel.hpp"
#include "mmdq/weights.hpp"

namespace mmdq {

struct SgdConfig {
  int n_points = 5;
  long max_iters = 100'000;
  double lr_offset = 100.0;
  double lr_scale = 1.0;
  std::uint64_t seed = 0;
  CostVariant cost_variant = CostVariant::Symmetric;
  long stop_window = 1000;
  double stop_rel_tol = 1e-4;  // 0 disables the early stop
  long trace_stride = 100;
  bool record_costs = false;   // keep every per-iteration cost (tests)

  /// eta_t = lr_scale / (lr_offset + t).
  double learning_rate(long t) const { return lr_scale / (lr_offset + static_cast<double>(t)); }
  void validate() const;
};

struct SgdState {
  Eigen::VectorXd points;
  long iter = 0;
  double running_mmd_sq = 0.0;
  Eigen::VectorXd running_m;
  Rng rng;
};

struct TracePoint {
  long t = 0;
  double running_mmd_sq = 0.0;
  Eigen::VectorXd points;
};
using IterationTrace = std::vector<TracePoint>;

enum class SgdStatus {
  MaxIters,   // hit max_iters
  Stalled,    // running MMD^2 changed less than stop_rel_tol over stop_window
  Aborted,    // kernel system could not be factorized
};
std::string_view to_string(SgdStatus status);

struct SgdResult {
  Quantization quantization;       // sum-to-one weights at the final points
  double running_mmd_sq = 0.0;     // running average of the sampled costs
  double mmd_estimate = 0.0;       // sqrt(max(running_mmd_sq, 0))
  Eigen::VectorXd final_m;         // embedding vector used for the weights
  SgdState state;
  IterationTrace trace;
  std::vector<double> costs;       // when record_costs is set
  long collisions = 0;             // number of collision nudges
  SgdStatus status = SgdStatus::MaxIters;
  std::string message;
};

/// Default initialization: target quantiles at levels (i - 1/2) / n.
Eigen::VectorXd quantile_init(const TargetDistribution& target, int n);

/// Stochastic gradient descent on the support points: each step draws an
/// independent pair from the target, folds its cost into the running MMD^2,
/// moves the points along the negative cost gradient with rate eta_t and
/// updates the running embedding vector. Final weights are the sum-to-one
/// optimum for the embedding recomputed at the final points (closed form when
/// available, else by quadrature).
SgdResult sgd_quantize(const KernelSpec& spec, const TargetDistribution& target,
                       const SgdConfig& cfg, const Eigen::VectorXd& init);

struct PenalizedResult {
  Quantization quantization;  // kind Simplex, weights pi(mu)
  Eigen::VectorXd mu;         // unconstrained weight iterate
  double running_objective = 0.0;
  double max_penalty = 0.0;   // largest ||mu - pi(mu)|| seen along the run
  IterationTrace trace;
  long collisions = 0;
};

/// Joint stochastic descent in (points, mu) on c''(x, pi(mu)) + ||mu - pi(mu)||.
PenalizedResult sgd_quantize_penalized(const KernelSpec& spec, const TargetDistribution& target,
                                       const SgdConfig& cfg, const Eigen::VectorXd& init_points,
                                       const Eigen::VectorXd& init_mu);

}  // namespace mmdq
