#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "mmdq/cost.hpp"
#include "mmdq/kernel.hpp"

namespace mmdq {

using Rng = std::mt19937_64;

struct NormalParams {
  double mean = 0.0;
  double std = 1.0;
};
struct UniformParams {
  double lo = 0.0;
  double hi = 1.0;
};
struct ExponentialParams {
  double rate = 1.0;
};

/// One-dimensional target measure P.
class TargetDistribution {
 public:
  using Params = std::variant<NormalParams, UniformParams, ExponentialParams>;

  /// Throws std::invalid_argument for invalid parameters.
  explicit TargetDistribution(Params params);

  static TargetDistribution normal(double mean = 0.0, double std = 1.0);
  static TargetDistribution uniform(double lo = 0.0, double hi = 1.0);
  static TargetDistribution exponential(double rate = 1.0);

  const Params& params() const noexcept { return params_; }
  bool is_normal() const noexcept { return std::holds_alternative<NormalParams>(params_); }

  /// "normal", "uniform" or "exponential".
  std::string family_name() const;
  /// Family and parameters, e.g. "normal(mean=0,std=1)".
  std::string label() const;

  double sample(Rng& rng) const;
  double pdf(double x) const;
  double cdf(double x) const;
  /// Inverse CDF; throws std::domain_error unless 0 < u < 1.
  double quantile(double u) const;
  double mean() const;

 private:
  Params params_;
};

/// Two independent draws from the target.
CostSample sample_pair(const TargetDistribution& d, Rng& rng);

/// E k(xi, x) for xi ~ d in closed form, when available:
/// Normal x Gaussian, Normal x Matern-1/2, Uniform x Gaussian,
/// Uniform x Matern-1/2, Exponential x Gaussian, Exponential x Matern-1/2.
std::optional<double> analytic_embedding(const TargetDistribution& d, const KernelSpec& spec,
                                         double x);

/// E k(xi, xi') for independent xi, xi' ~ d, for the same pairs.
std::optional<double> analytic_self_energy(const TargetDistribution& d, const KernelSpec& spec);

/// Standard normal CDF.
double std_normal_cdf(double z);

/// Where an EmbeddingModel gets its numbers from.
enum class EmbeddingSource { ClosedForm, Quadrature, MonteCarlo };

/// "closed_form", "quadrature" or "monte_carlo".
const char* to_string(EmbeddingSource s) noexcept;

/// E k(xi, x) by adaptive Gauss-Kronrod quadrature over the target's support,
/// truncated where the kernel or the density is negligible.
double quadrature_embedding(const TargetDistribution& d, const KernelSpec& spec, double x);

/// E k(xi, xi') as a single integral of the kernel against the density of
/// xi - xi', which is known in closed form for every target family.
double quadrature_self_energy(const TargetDistribution& d, const KernelSpec& spec);

/// Embedding vector m(x) and self energy of a target under a kernel: closed
/// form when available, otherwise quadrature. A Monte-Carlo model over a
/// fixed sample can be requested explicitly.
class EmbeddingModel {
 public:
  static constexpr std::size_t kDefaultSamples = 1'000'000;

  EmbeddingModel(TargetDistribution target, KernelSpec spec);

  /// Sample-average embedding over `samples` draws; the self energy averages
  /// the kernel over consecutive draws.
  static EmbeddingModel monte_carlo(TargetDistribution target, KernelSpec spec,
                                    std::size_t samples = kDefaultSamples, std::uint64_t seed = 0x6d6d6471ULL);

  EmbeddingSource source() const noexcept { return source_; }
  bool analytic() const noexcept { return source_ == EmbeddingSource::ClosedForm; }
  const TargetDistribution& target() const noexcept { return target_; }
  const KernelSpec& spec() const noexcept { return spec_; }

  double embedding(double x) const;
  Eigen::VectorXd embedding(const Eigen::VectorXd& points) const;
  double self_energy() const noexcept { return self_energy_; }

 private:
  EmbeddingModel(TargetDistribution target, KernelSpec spec, EmbeddingSource source);

  TargetDistribution target_;
  KernelSpec spec_;
  EmbeddingSource source_ = EmbeddingSource::ClosedForm;
  Eigen::VectorXd samples_;  // Monte-Carlo draws
  double self_energy_ = 0.0;
};

}  // namespace mmdq
