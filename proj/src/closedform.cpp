#include "mmdq/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mmdq/distributions.hpp"
#include "mmdq/error.hpp"
#include "mmdq/linalg.hpp"

namespace mmdq {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kArmijo = 1e-4;
constexpr double kGradTol = 1e-8;
constexpr int kMaxIters = 10'000;
constexpr double kMinStep = 1e-16;

double smoothed_var(const NormalTargetSpec& t) {
  return t.std * t.std + t.kernel_ell * t.kernel_ell;
}

// Unnormalized embedding exp(-(x - mean)^2 / (2 (std^2 + ell^2))).
Eigen::VectorXd embedding_exponentials(const NormalTargetSpec& t, const Eigen::VectorXd& x) {
  const double s2 = smoothed_var(t);
  return (-(x.array() - t.mean).square() / (2.0 * s2)).exp().matrix();
}

Eigen::VectorXd embedding_vector(const NormalTargetSpec& t, const Eigen::VectorXd& x) {
  return embedding_exponentials(t, x) / std::sqrt(2.0 * kPi * smoothed_var(t));
}

Eigen::VectorXd quantile_points(const NormalTargetSpec& t, int n) {
  const auto target = TargetDistribution::normal(t.mean, t.std);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    x[i] = target.quantile((i + 0.5) / n);
  }
  return x;
}

}  // namespace

void NormalTargetSpec::validate() const {
  if (!std::isfinite(mean)) throw std::invalid_argument("normal target mean must be finite");
  if (!(std > 0.0)) throw std::invalid_argument("normal target std must be positive");
  if (!(kernel_ell > 0.0)) throw std::invalid_argument("kernel bandwidth must be positive");
}

double embedding_at(const NormalTargetSpec& t, double x) {
  const double s2 = smoothed_var(t);
  return std::exp(-(x - t.mean) * (x - t.mean) / (2.0 * s2)) / std::sqrt(2.0 * kPi * s2);
}

double embedding_grad(const NormalTargetSpec& t, double x) {
  return -(x - t.mean) / smoothed_var(t) * embedding_at(t, x);
}

double self_energy(const NormalTargetSpec& t) {
  return 1.0 / std::sqrt(2.0 * kPi * (2.0 * t.std * t.std + t.kernel_ell * t.kernel_ell));
}

double closed_mmd_sq(const NormalTargetSpec& t, const Eigen::VectorXd& points, WeightKind mode) {
  t.validate();
  const KernelSystem sys(t.kernel(), points);
  // S - (2 pi (s^2 + l^2))^-1 sum_ij e_i e_j (K^-1)_ij
  const Eigen::VectorXd e = embedding_exponentials(t, points);
  const Eigen::VectorXd k_inv_e = sys.solve(e);
  double value = self_energy(t) - e.dot(k_inv_e) / (2.0 * kPi * smoothed_var(t));
  if (mode == WeightKind::SumToOne) {
    const double excess = k_inv_e.sum() / std::sqrt(2.0 * kPi * smoothed_var(t)) - 1.0;
    value += excess * excess / sys.ones_inv_ones();
  } else if (mode != WeightKind::Signed) {
    throw std::invalid_argument("closed_mmd_sq supports Signed and SumToOne weights");
  }
  return value;
}

Eigen::VectorXd closed_mmd_grad(const NormalTargetSpec& t, const Eigen::VectorXd& points,
                                WeightKind mode) {
  t.validate();
  if (mode != WeightKind::Signed && mode != WeightKind::SumToOne) {
    throw std::invalid_argument("closed_mmd_grad supports Signed and SumToOne weights");
  }
  const KernelSystem sys(t.kernel(), points);
  const Eigen::Index n = points.size();
  const double ell2 = t.kernel_ell * t.kernel_ell;
  const Eigen::MatrixXd& k = sys.matrix();

  // G_ij = d k(x_i, x_j) / d x_i = -(x_i - x_j) / ell^2 k(x_i, x_j)
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = -(points[i] - points[j]) / ell2 * k(i, j);
    }
  }
  const Eigen::VectorXd m = embedding_vector(t, points);
  const Eigen::VectorXd dm = (-(points.array() - t.mean) / smoothed_var(t) * m.array()).matrix();
  const Eigen::VectorXd u = sys.solve(m);
  const Eigen::VectorXd gu = g * u;

  Eigen::VectorXd grad = (-2.0 * dm.array() * u.array() + 2.0 * u.array() * gu.array()).matrix();
  if (mode == WeightKind::SumToOne) {
    const Eigen::VectorXd& w = sys.inv_ones();
    const double s = sys.ones_inv_ones();
    const Eigen::VectorXd gw = g * w;
    const double excess = u.sum() - 1.0;
    const Eigen::ArrayXd d_sum = w.array() * dm.array() - w.array() * gu.array() - u.array() * gw.array();
    const Eigen::ArrayXd d_s = -2.0 * w.array() * gw.array();
    grad += (2.0 * excess * d_sum / s - excess * excess * d_s / (s * s)).matrix();
  }
  return grad;
}

DeterministicResult deterministic_optimize(const NormalTargetSpec& t, int n, WeightKind mode,
                                           const std::optional<Eigen::VectorXd>& init) {
  t.validate();
  if (n < 1) {
    throw std::invalid_argument("deterministic_optimize needs n >= 1");
  }
  if (mode != WeightKind::Signed && mode != WeightKind::SumToOne) {
    throw std::invalid_argument("deterministic_optimize supports Signed and SumToOne weights");
  }
  Eigen::VectorXd x = init ? *init : quantile_points(t, n);
  if (x.size() != n) {
    throw std::invalid_argument("initial points must have length n");
  }

  DeterministicResult out;
  double f = closed_mmd_sq(t, x, mode);
  Eigen::VectorXd grad = closed_mmd_grad(t, x, mode);
  double step = 1.0;
  int iter = 0;
  for (; iter < kMaxIters; ++iter) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= kGradTol) {
      out.converged = true;
      break;
    }
    step *= 2.0;
    bool accepted = false;
    while (step >= kMinStep) {
      const Eigen::VectorXd trial = x - step * grad;
      double f_trial = 0.0;
      try {
        f_trial = closed_mmd_sq(t, trial, mode);
      } catch (const Error&) {
        step *= 0.5;
        continue;
      }
      if (f_trial <= f - kArmijo * step * gnorm2) {
        x = trial;
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No step can show a decrease once the first-order model is below the
      // rounding of f; that is a stationary point to working precision.
      out.converged = gnorm2 <= 1e-12 * std::max(1.0, std::abs(f));
      break;
    }
    grad = closed_mmd_grad(t, x, mode);
  }

  const KernelSystem sys(t.kernel(), x);
  const Eigen::VectorXd m = embedding_vector(t, x);
  out.quantization = mode == WeightKind::SumToOne ? sum_to_one_weights(sys, m) : signed_weights(sys, m);
  out.iterations = iter;
  out.grad_norm = grad.norm();
  out.converged = out.converged || out.grad_norm <= kGradTol;
  out.mmd = std::sqrt(std::max(f, 0.0));
  return out;
}

}  // namespace mmdq
