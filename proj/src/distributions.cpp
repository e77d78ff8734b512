#include "mmdq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mmdq {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log Phi(z), accurate in the far lower tail.
double log_std_normal_cdf(double z) {
  if (z > -30.0) {
    return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  }
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

// Phi(b) - Phi(a) for a <= b without cancellation in the upper tail.
double normal_interval(double a, double b) {
  if (a > 0.0) {
    return std_normal_cdf(-a) - std_normal_cdf(-b);
  }
  return std_normal_cdf(b) - std_normal_cdf(a);
}

bool is_laplace(const KernelSpec& spec) { return !spec.is_gaussian() && spec.nu == 0.5; }

std::optional<double> embed_normal(const NormalParams& p, const KernelSpec& spec, double x) {
  const double delta = x - p.mean;
  if (spec.is_gaussian()) {
    const double s2 = p.std * p.std + spec.ell * spec.ell;
    return std::exp(-delta * delta / (2.0 * s2)) / std::sqrt(2.0 * kPi * s2);
  }
  if (is_laplace(spec)) {
    const double ell = spec.ell;
    const double shift = p.std * p.std / (2.0 * ell * ell);
    const double ratio = p.std / ell;
    const double right =
        std::exp(shift - delta / ell + log_std_normal_cdf(delta / p.std - ratio));
    const double left =
        std::exp(shift + delta / ell + log_std_normal_cdf(-delta / p.std - ratio));
    return (right + left) / (2.0 * ell);
  }
  return std::nullopt;
}

std::optional<double> embed_uniform(const UniformParams& p, const KernelSpec& spec, double x) {
  const double width = p.hi - p.lo;
  if (spec.is_gaussian()) {
    return normal_interval((p.lo - x) / spec.ell, (p.hi - x) / spec.ell) / width;
  }
  if (is_laplace(spec)) {
    const double ell = spec.ell;
    if (x < p.lo) {
      return 0.5 * (std::exp(-(p.lo - x) / ell) - std::exp(-(p.hi - x) / ell)) / width;
    }
    if (x > p.hi) {
      return 0.5 * (std::exp(-(x - p.hi) / ell) - std::exp(-(x - p.lo) / ell)) / width;
    }
    return (1.0 - 0.5 * std::exp(-(x - p.lo) / ell) - 0.5 * std::exp(-(p.hi - x) / ell)) / width;
  }
  return std::nullopt;
}

std::optional<double> embed_exponential(const ExponentialParams& p, const KernelSpec& spec,
                                        double x) {
  const double r = p.rate;
  const double ell = spec.ell;
  if (spec.is_gaussian()) {
    return std::exp(std::log(r) - r * x + 0.5 * r * r * ell * ell +
                    log_std_normal_cdf((x - r * ell * ell) / ell));
  }
  if (is_laplace(spec)) {
    const double rl = r * ell;
    if (x <= 0.0) {
      return r * std::exp(x / ell) / (2.0 * (rl + 1.0));
    }
    const double upper = r * std::exp(-r * x) / (2.0 * (rl + 1.0));
    // r (e^{-r x} - e^{-x/ell}) / (2 (1 - r ell)), written to survive r ell -> 1
    const double gap = 1.0 - rl;
    const double lower = std::abs(gap) < 1e-8
                             ? r * x * std::exp(-x / ell) / (2.0 * ell)
                             : r * std::exp(-x / ell) * std::expm1(x * gap / ell) / (2.0 * gap);
    return lower + upper;
  }
  return std::nullopt;
}

}  // namespace

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

TargetDistribution::TargetDistribution(Params params) : params_(params) {
  std::visit(Overloaded{
                 [](const NormalParams& p) {
                   if (!std::isfinite(p.mean) || !(p.std > 0.0) || !std::isfinite(p.std)) {
                     throw std::invalid_argument("normal target needs finite mean and std > 0");
                   }
                 },
                 [](const UniformParams& p) {
                   if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi)) {
                     throw std::invalid_argument("uniform target needs finite lo < hi");
                   }
                 },
                 [](const ExponentialParams& p) {
                   if (!(p.rate > 0.0) || !std::isfinite(p.rate)) {
                     throw std::invalid_argument("exponential target needs rate > 0");
                   }
                 },
             },
             params_);
}

TargetDistribution TargetDistribution::normal(double mean, double std) {
  return TargetDistribution(NormalParams{mean, std});
}
TargetDistribution TargetDistribution::uniform(double lo, double hi) {
  return TargetDistribution(UniformParams{lo, hi});
}
TargetDistribution TargetDistribution::exponential(double rate) {
  return TargetDistribution(ExponentialParams{rate});
}

std::string TargetDistribution::family_name() const {
  return std::visit(Overloaded{
                        [](const NormalParams&) { return std::string("normal"); },
                        [](const UniformParams&) { return std::string("uniform"); },
                        [](const ExponentialParams&) { return std::string("exponential"); },
                    },
                    params_);
}

std::string TargetDistribution::label() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const NormalParams& p) { os << "normal(mean=" << p.mean << ",std=" << p.std << ")"; },
                 [&](const UniformParams& p) { os << "uniform(lo=" << p.lo << ",hi=" << p.hi << ")"; },
                 [&](const ExponentialParams& p) { os << "exponential(rate=" << p.rate << ")"; },
             },
             params_);
  return os.str();
}

double TargetDistribution::sample(Rng& rng) const {
  return std::visit(Overloaded{
                        [&](const NormalParams& p) {
                          return std::normal_distribution<double>(p.mean, p.std)(rng);
                        },
                        [&](const UniformParams& p) {
                          return std::uniform_real_distribution<double>(p.lo, p.hi)(rng);
                        },
                        [&](const ExponentialParams& p) {
                          return std::exponential_distribution<double>(p.rate)(rng);
                        },
                    },
                    params_);
}

double TargetDistribution::pdf(double x) const {
  return std::visit(Overloaded{
                        [&](const NormalParams& p) {
                          const double z = (x - p.mean) / p.std;
                          return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * p.std);
                        },
                        [&](const UniformParams& p) {
                          return (x >= p.lo && x <= p.hi) ? 1.0 / (p.hi - p.lo) : 0.0;
                        },
                        [&](const ExponentialParams& p) {
                          return x >= 0.0 ? p.rate * std::exp(-p.rate * x) : 0.0;
                        },
                    },
                    params_);
}

double TargetDistribution::cdf(double x) const {
  return std::visit(Overloaded{
                        [&](const NormalParams& p) { return std_normal_cdf((x - p.mean) / p.std); },
                        [&](const UniformParams& p) {
                          if (x <= p.lo) return 0.0;
                          if (x >= p.hi) return 1.0;
                          return (x - p.lo) / (p.hi - p.lo);
                        },
                        [&](const ExponentialParams& p) {
                          return x <= 0.0 ? 0.0 : -std::expm1(-p.rate * x);
                        },
                    },
                    params_);
}

double TargetDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("quantile level must lie in (0, 1)");
  }
  return std::visit(Overloaded{
                        [&](const NormalParams& p) {
                          return boost::math::quantile(
                              boost::math::normal_distribution<double>(p.mean, p.std), u);
                        },
                        [&](const UniformParams& p) { return p.lo + u * (p.hi - p.lo); },
                        [&](const ExponentialParams& p) { return -std::log1p(-u) / p.rate; },
                    },
                    params_);
}

double TargetDistribution::mean() const {
  return std::visit(Overloaded{
                        [](const NormalParams& p) { return p.mean; },
                        [](const UniformParams& p) { return 0.5 * (p.lo + p.hi); },
                        [](const ExponentialParams& p) { return 1.0 / p.rate; },
                    },
                    params_);
}

CostSample sample_pair(const TargetDistribution& d, Rng& rng) {
  CostSample s;
  s.xi = d.sample(rng);
  s.xi_prime = d.sample(rng);
  return s;
}

std::optional<double> analytic_embedding(const TargetDistribution& d, const KernelSpec& spec,
                                         double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("embedding argument must be finite");
  }
  return std::visit(Overloaded{
                        [&](const NormalParams& p) { return embed_normal(p, spec, x); },
                        [&](const UniformParams& p) { return embed_uniform(p, spec, x); },
                        [&](const ExponentialParams& p) { return embed_exponential(p, spec, x); },
                    },
                    d.params());
}

std::optional<double> analytic_self_energy(const TargetDistribution& d, const KernelSpec& spec) {
  const double ell = spec.ell;
  const bool gaussian = spec.is_gaussian();
  const bool laplace = is_laplace(spec);
  if (!gaussian && !laplace) {
    return std::nullopt;
  }
  return std::visit(
      Overloaded{
          [&](const NormalParams& p) -> std::optional<double> {
            const double s2 = p.std * p.std;
            if (gaussian) {
              return 1.0 / std::sqrt(2.0 * kPi * (2.0 * s2 + ell * ell));
            }
            // xi - xi' ~ N(0, 2 s^2)
            return std::exp(s2 / (ell * ell) +
                            log_std_normal_cdf(-std::numbers::sqrt2 * p.std / ell)) /
                   ell;
          },
          [&](const UniformParams& p) -> std::optional<double> {
            // xi - xi' has the triangular density (w - |t|) / w^2 on [-w, w]
            const double w = p.hi - p.lo;
            if (gaussian) {
              const double phi0 = 1.0 / (std::sqrt(2.0 * kPi) * ell);
              const double phiw = phi0 * std::exp(-0.5 * (w / ell) * (w / ell));
              return 2.0 / (w * w) *
                     (w * (std_normal_cdf(w / ell) - 0.5) - ell * ell * (phi0 - phiw));
            }
            return (w + ell * std::expm1(-w / ell)) / (w * w);
          },
          [&](const ExponentialParams& p) -> std::optional<double> {
            // xi - xi' is Laplace with rate r
            const double r = p.rate;
            if (gaussian) {
              return r * std::exp(0.5 * r * r * ell * ell + log_std_normal_cdf(-r * ell));
            }
            return r / (2.0 * (r * ell + 1.0));
          },
      },
      d.params());
}

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
constexpr unsigned kQuadDepth = 15;
constexpr double kQuadTol = 1e-13;

// Distance beyond which the kernel is below exp(-40) of its peak.
double kernel_reach(const KernelSpec& s) {
  const double rate = s.is_gaussian() ? 1.0 : std::min(1.0, std::sqrt(2.0 * s.nu));
  return 40.0 * s.ell / rate;
}

// Support, cut where the density is negligible.
std::pair<double, double> effective_support(const TargetDistribution& d) {
  return std::visit(Overloaded{
                        [](const NormalParams& p) { return std::pair{p.mean - 40.0 * p.std, p.mean + 40.0 * p.std}; },
                        [](const UniformParams& p) { return std::pair{p.lo, p.hi}; },
                        [](const ExponentialParams& p) { return std::pair{0.0, 40.0 / p.rate}; },
                    },
                    d.params());
}

// Density of xi - xi' at distance u >= 0, and the distance past which it vanishes.
double difference_density(const TargetDistribution& d, double u) {
  return std::visit(Overloaded{
                        [u](const NormalParams& p) {
                          const double s = std::numbers::sqrt2 * p.std;
                          return std::exp(-0.5 * u * u / (s * s)) / (s * std::sqrt(2.0 * kPi));
                        },
                        [u](const UniformParams& p) {
                          const double w = p.hi - p.lo;
                          return u < w ? (w - u) / (w * w) : 0.0;
                        },
                        [u](const ExponentialParams& p) { return 0.5 * p.rate * std::exp(-p.rate * u); },
                    },
                    d.params());
}

double difference_reach(const TargetDistribution& d) {
  return std::visit(Overloaded{
                        [](const NormalParams& p) { return 40.0 * std::numbers::sqrt2 * p.std; },
                        [](const UniformParams& p) { return p.hi - p.lo; },
                        [](const ExponentialParams& p) { return 40.0 / p.rate; },
                    },
                    d.params());
}

}  // namespace

const char* to_string(EmbeddingSource s) noexcept {
  switch (s) {
    case EmbeddingSource::ClosedForm: return "closed_form";
    case EmbeddingSource::Quadrature: return "quadrature";
    case EmbeddingSource::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

double quadrature_embedding(const TargetDistribution& d, const KernelSpec& spec, double x) {
  const auto [slo, shi] = effective_support(d);
  const double reach = kernel_reach(spec);
  const double lo = std::max(slo, x - reach);
  const double hi = std::min(shi, x + reach);
  if (!(lo < hi)) return 0.0;
  auto f = [&](double y) { return d.pdf(y) * radial(spec, std::abs(x - y)); };
  // split at x, where the kernel may have a kink
  double total = 0.0;
  if (lo < x) total += Quad::integrate(f, lo, std::min(x, hi), kQuadDepth, kQuadTol);
  if (x < hi) total += Quad::integrate(f, std::max(x, lo), hi, kQuadDepth, kQuadTol);
  return total;
}

double quadrature_self_energy(const TargetDistribution& d, const KernelSpec& spec) {
  const double reach = std::min(kernel_reach(spec), difference_reach(d));
  auto f = [&](double u) { return difference_density(d, u) * radial(spec, u); };
  return 2.0 * Quad::integrate(f, 0.0, reach, kQuadDepth, kQuadTol);
}

EmbeddingModel::EmbeddingModel(TargetDistribution target, KernelSpec spec, EmbeddingSource source)
    : target_(std::move(target)), spec_(spec), source_(source) {
  spec_.validate();
}

EmbeddingModel::EmbeddingModel(TargetDistribution target, KernelSpec spec)
    : EmbeddingModel(std::move(target), spec, EmbeddingSource::ClosedForm) {
  const auto se = analytic_self_energy(target_, spec_);
  if (se && analytic_embedding(target_, spec_, target_.mean())) {
    self_energy_ = *se;
    return;
  }
  source_ = EmbeddingSource::Quadrature;
  self_energy_ = quadrature_self_energy(target_, spec_);
}

EmbeddingModel EmbeddingModel::monte_carlo(TargetDistribution target, KernelSpec spec, std::size_t samples,
                                           std::uint64_t seed) {
  if (samples < 2) {
    throw std::invalid_argument("Monte-Carlo embedding needs at least two samples");
  }
  EmbeddingModel out(std::move(target), spec, EmbeddingSource::MonteCarlo);
  Rng rng(seed);
  out.samples_.resize(static_cast<Eigen::Index>(samples));
  for (Eigen::Index i = 0; i < out.samples_.size(); ++i) {
    out.samples_[i] = out.target_.sample(rng);
  }
  // consecutive draws are independent, so (xi_j, xi_{j+1}) are P x P pairs
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < out.samples_.size(); ++i) {
    acc += eval(out.spec_, out.samples_[i], out.samples_[i + 1]);
  }
  out.self_energy_ = acc / static_cast<double>(out.samples_.size() - 1);
  return out;
}

double EmbeddingModel::embedding(double x) const {
  switch (source_) {
    case EmbeddingSource::ClosedForm: return *analytic_embedding(target_, spec_, x);
    case EmbeddingSource::Quadrature: return quadrature_embedding(target_, spec_, x);
    case EmbeddingSource::MonteCarlo: break;
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    acc += radial(spec_, std::abs(samples_[i] - x));
  }
  return acc / static_cast<double>(samples_.size());
}
Eigen::VectorXd EmbeddingModel::embedding(const Eigen::VectorXd& points) const {
  Eigen::VectorXd out(points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    out[i] = embedding(points[i]);
  }
  return out;
}

}  // namespace mmdq
