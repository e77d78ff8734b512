#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mmdq/linalg.hpp"

namespace mmdq {

enum class WeightKind { Signed, SumToOne, Simplex };

std::string_view to_string(WeightKind kind);
/// Accepts "signed", "sum-to-one" and "simplex"; throws std::invalid_argument.
WeightKind parse_weight_kind(std::string_view text);

/// Weighted support points sum_i p_i delta_{x_i}.
struct Quantization {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  WeightKind kind = WeightKind::Signed;

  /// Checks the invariants of `kind` (sum to one within 1e-10, weights
  /// >= -1e-12 for Simplex, distinct points). Throws std::invalid_argument.
  void validate() const;
};

/// Result of the non-negativity constrained weight problem.
struct ActiveSetSolution {
  Quantization quantization;                 // kind Simplex
  std::vector<Eigen::Index> active_set;      // indices with weight fixed at 0
  Eigen::VectorXd multipliers;               // one per active index, >= 0 at optimum
  double lambda = 0.0;                       // multiplier of sum p = 1
  int iterations = 0;
};

/// Unconstrained optimum p = K^-1 m.
Quantization signed_weights(const KernelSystem& sys, const Eigen::VectorXd& m);

/// Optimum subject to sum p = 1; entries may be negative.
Quantization sum_to_one_weights(const KernelSystem& sys, const Eigen::VectorXd& m);

/// Optimum over the probability simplex (sum p = 1, p >= 0).
///
/// Returns the sum-to-one solution unchanged when it is already
/// non-negative. Otherwise runs a primal active-set method started at the
/// simplex projection of that solution; each iteration solves the bordered
/// system restricted to the free indices. Throws ActiveSetCycle after
/// 10 n iterations.
ActiveSetSolution simplex_weights(const KernelSystem& sys, const Eigen::VectorXd& m);

/// Euclidean projection onto the probability simplex (sort and threshold).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// self_energy - m^T K^-1 m.
double optimal_mmd_sq_signed(const KernelSystem& sys, const Eigen::VectorXd& m, double self_energy);

/// self_energy - m^T K^-1 m + (1^T K^-1 m - 1)^2 / (1^T K^-1 1).
double optimal_mmd_sq_probability(const KernelSystem& sys, const Eigen::VectorXd& m,
                                  double self_energy);

/// MMD^2 of an explicit weight vector: self_energy - 2 p^T m + p^T K p.
double mmd_sq(const KernelSystem& sys, const Eigen::VectorXd& m, double self_energy,
              const Eigen::VectorXd& weights);

/// p^T K p - 2 p^T m, the weight-dependent part of MMD^2.
double weight_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& m,
                        const Eigen::VectorXd& p);

}  // namespace mmdq
