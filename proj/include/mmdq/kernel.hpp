#pragma once

#include <limits>
#include <string>

#include <Eigen/Core>

namespace mmdq {

enum class KernelFamily { Gaussian, Matern };

/// Translation-invariant kernel k(x, y) = C(|y - x|), normalized so that
/// it integrates to one in its second argument.
///
/// Gaussian: the normal density with standard deviation `ell`.
/// Matern:   Bessel-K form with smoothness `nu`; nu = 1/2 is the Laplace
///           density and nu = infinity is the Gaussian of the same `ell`.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double ell = 1.0;
  double nu = std::numeric_limits<double>::infinity();

  static KernelSpec gaussian(double ell);
  /// nu == +inf yields the Gaussian kernel.
  static KernelSpec matern(double nu, double ell);

  /// Throws std::invalid_argument unless ell > 0 and (for Matern) nu > 0.
  void validate() const;

  bool is_gaussian() const noexcept {
    return family == KernelFamily::Gaussian || nu == std::numeric_limits<double>::infinity();
  }
  /// True for Matern kernels with a kink at the origin (nu <= 1/2).
  bool has_kink() const noexcept { return !is_gaussian() && nu <= 0.5; }

  /// e.g. "gaussian(ell=0.5)" or "matern(nu=2.5,ell=0.1)".
  std::string label() const;
};

/// Radial profile C(d) for d >= 0.
double radial(const KernelSpec& spec, double d);
/// dC/dd for d > 0; zero at d == 0.
double radial_derivative(const KernelSpec& spec, double d);

/// k(x, y). Throws std::domain_error on non-finite input.
double eval(const KernelSpec& spec, double x, double y);

/// Partial derivative of k(x, y) with respect to x. For kernels with a kink
/// (Matern nu <= 1/2) at x == y the subgradient 0 is returned and
/// `*subgradient` (when given) is set to true.
double eval_grad_x(const KernelSpec& spec, double x, double y, bool* subgradient = nullptr);

/// k(x, x), the peak value.
double peak(const KernelSpec& spec);

/// Quadrature of y -> k(0, y) over [-T, T], T = 40 ell. Should be 1.
double unit_integral_check(const KernelSpec& spec);

/// Kernel matrix K_ij = k(x_i, x_j).
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::VectorXd& points);

/// Vector (k(xi, x_1), ..., k(xi, x_n)).
Eigen::VectorXd cross(const KernelSpec& spec, double xi, const Eigen::VectorXd& points);

/// Vector of d k(x_i, xi) / d x_i.
Eigen::VectorXd cross_grad(const KernelSpec& spec, double xi, const Eigen::VectorXd& points);

/// Natural log of the modified Bessel function of the second kind K_order(z),
/// z > 0. Stable where K itself would overflow or underflow.
double log_bessel_k(double order, double z);

}  // namespace mmdq
