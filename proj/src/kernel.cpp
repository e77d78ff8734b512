#include "mmdq/kernel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mmdq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// Orders above this use the uniform (Debye) asymptotic expansion, which keeps
// z^nu K_nu(z) representable for the large-nu Gaussian limit.
constexpr double kDebyeOrder = 40.0;

double log_bessel_k_debye(double nu, double x) {
  const double w = x / nu;
  const double s = std::sqrt(1.0 + w * w);
  const double t = 1.0 / s;
  const double eta = s + std::log(w / (1.0 + s));
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 + t2 * (-462.0 + 385.0 * t2)) / 1152.0;
  const double u3 =
      t * t2 * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - 425425.0 * t2))) / 414720.0;
  const double u4 =
      t2 * t2 *
      (4465125.0 + t2 * (-94121676.0 + t2 * (349922430.0 + t2 * (-446185740.0 + 185910725.0 * t2)))) /
      39813120.0;
  const double inv = 1.0 / nu;
  const double series = 1.0 - inv * (u1 - inv * (u2 - inv * (u3 - inv * u4)));
  return 0.5 * std::log(kPi / (2.0 * nu)) - nu * eta - 0.5 * std::log(s) + std::log(series);
}

void require_finite(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::domain_error("kernel arguments must be finite");
  }
}

double matern_log_prefactor(double nu, double ell) {
  return -nu * std::log(2.0) + 0.5 * std::log(2.0 * nu) - std::log(ell) - 0.5 * std::log(kPi) -
         std::lgamma(nu + 0.5);
}

double gaussian_radial(double ell, double d) {
  const double z = d / ell;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * ell);
}

double matern_radial(double nu, double ell, double d) {
  if (nu == 0.5) {
    return std::exp(-d / ell) / (2.0 * ell);
  }
  if (nu == 1.5) {
    const double z = std::sqrt(3.0) * d / ell;
    return std::sqrt(3.0) / (4.0 * ell) * (1.0 + z) * std::exp(-z);
  }
  if (nu == 2.5) {
    const double z = std::sqrt(5.0) * d / ell;
    return std::sqrt(5.0) / (16.0 * ell) * (3.0 + z * (3.0 + z)) * std::exp(-z);
  }
  if (d == 0.0) {
    // limit of z^nu K_nu(z) -> 2^(nu-1) Gamma(nu)
    return std::sqrt(2.0 * nu) / (2.0 * ell * std::sqrt(kPi)) *
           std::exp(std::lgamma(nu) - std::lgamma(nu + 0.5));
  }
  const double z = std::sqrt(2.0 * nu) * d / ell;
  return std::exp(matern_log_prefactor(nu, ell) + nu * std::log(z) + log_bessel_k(nu, z));
}

double matern_radial_derivative(double nu, double ell, double d) {
  if (d == 0.0) {
    return 0.0;
  }
  if (nu == 0.5) {
    return -std::exp(-d / ell) / (2.0 * ell * ell);
  }
  if (nu == 1.5) {
    const double c = std::sqrt(3.0) / ell;
    const double z = c * d;
    return -std::sqrt(3.0) / (4.0 * ell) * c * z * std::exp(-z);
  }
  if (nu == 2.5) {
    const double c = std::sqrt(5.0) / ell;
    const double z = c * d;
    return -std::sqrt(5.0) / (16.0 * ell) * c * z * (1.0 + z) * std::exp(-z);
  }
  // d/dz [z^nu K_nu(z)] = -z^nu K_{nu-1}(z)
  const double c = std::sqrt(2.0 * nu) / ell;
  const double z = c * d;
  return -std::exp(matern_log_prefactor(nu, ell) + std::log(c) + nu * std::log(z) +
                   log_bessel_k(nu - 1.0, z));
}

}  // namespace

KernelSpec KernelSpec::gaussian(double ell) {
  KernelSpec spec{KernelFamily::Gaussian, ell, kInf};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::matern(double nu, double ell) {
  KernelSpec spec{nu == kInf ? KernelFamily::Gaussian : KernelFamily::Matern, ell, nu};
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (!(ell > 0.0) || !std::isfinite(ell)) {
    throw std::invalid_argument("kernel bandwidth ell must be positive and finite");
  }
  if (family == KernelFamily::Matern && !(nu > 0.0)) {
    throw std::invalid_argument("Matern smoothness nu must be positive or infinity");
  }
}

std::string KernelSpec::label() const {
  std::ostringstream os;
  if (is_gaussian()) {
    os << "gaussian(ell=" << ell << ")";
  } else {
    os << "matern(nu=" << nu << ",ell=" << ell << ")";
  }
  return os.str();
}

double log_bessel_k(double order, double z) {
  const double nu = std::abs(order);
  if (!(z > 0.0)) {
    throw std::domain_error("log_bessel_k requires z > 0");
  }
  if (nu > kDebyeOrder) {
    return log_bessel_k_debye(nu, z);
  }
  // large-argument asymptotics; libstdc++ refuses big arguments and K underflows anyway
  auto hankel = [nu, z] {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 6; ++k) {
      term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
      sum += term;
    }
    return -z + 0.5 * std::log(kPi / (2.0 * z)) + std::log(sum);
  };
  if (z > 500.0) {
    return hankel();
  }
  const double k = std::cyl_bessel_k(nu, z);
  if (k > 0.0 && std::isfinite(k)) {
    return std::log(k);
  }
  if (k == 0.0) {
    return hankel();
  }
  // small-argument asymptotics (overflow of K itself)
  if (nu == 0.0) {
    return std::log(-std::log(0.5 * z) - std::numbers::egamma);
  }
  return std::lgamma(nu) - std::log(2.0) + nu * std::log(2.0 / z);
}

double radial(const KernelSpec& spec, double d) {
  return spec.is_gaussian() ? gaussian_radial(spec.ell, d) : matern_radial(spec.nu, spec.ell, d);
}

double radial_derivative(const KernelSpec& spec, double d) {
  if (spec.is_gaussian()) {
    return -d / (spec.ell * spec.ell) * gaussian_radial(spec.ell, d);
  }
  return matern_radial_derivative(spec.nu, spec.ell, d);
}

double eval(const KernelSpec& spec, double x, double y) {
  require_finite(x, y);
  return radial(spec, std::abs(y - x));
}

double eval_grad_x(const KernelSpec& spec, double x, double y, bool* subgradient) {
  require_finite(x, y);
  if (subgradient != nullptr) {
    *subgradient = false;
  }
  const double diff = x - y;
  if (diff == 0.0) {
    if (subgradient != nullptr && spec.has_kink()) {
      *subgradient = true;
    }
    return 0.0;
  }
  const double dd = radial_derivative(spec, std::abs(diff));
  return diff > 0.0 ? dd : -dd;
}

double peak(const KernelSpec& spec) { return radial(spec, 0.0); }

double unit_integral_check(const KernelSpec& spec) {
  spec.validate();
  const double half_width = 40.0 * spec.ell;
  auto f = [&spec](double y) { return radial(spec, std::abs(y)); };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  // split at the origin where Matern nu <= 1/2 has its kink
  return Quad::integrate(f, -half_width, 0.0, 20, 1e-15) +
         Quad::integrate(f, 0.0, half_width, 20, 1e-15);
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::VectorXd& points) {
  const Eigen::Index n = points.size();
  Eigen::MatrixXd k(n, n);
  const double diag = peak(spec);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = diag;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = eval(spec, points[i], points[j]);
    }
  }
  return k;
}

Eigen::VectorXd cross(const KernelSpec& spec, double xi, const Eigen::VectorXd& points) {
  Eigen::VectorXd out(points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    out[i] = eval(spec, xi, points[i]);
  }
  return out;
}

Eigen::VectorXd cross_grad(const KernelSpec& spec, double xi, const Eigen::VectorXd& points) {
  Eigen::VectorXd out(points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    out[i] = eval_grad_x(spec, points[i], xi);
  }
  return out;
}

}  // namespace mmdq
