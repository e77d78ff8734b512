#include "mmdq/cost.hpp"

#include <stdexcept>

#include "mmdq/weights.hpp"

namespace mmdq {
namespace {

// G_ij = d k(x_i, x_j) / d x_i, zero on the diagonal. For any y, z:
//   y^T (dK / dx_i) z = y_i (G z)_i + z_i (G y)_i.
Eigen::MatrixXd gram_grad(const KernelSpec& spec, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = eval_grad_x(spec, x[i], x[j]);
      g(i, j) = v;
      g(j, i) = -v;
    }
  }
  return g;
}

// Per-sample quantities shared by c, c' and their gradients.
struct PairTerms {
  Eigen::VectorXd a, b;    // k(xi, x), k(xi', x)
  Eigen::VectorXd u, v;    // K^-1 a, K^-1 b
  double alpha = 0.0;      // 1 - 1^T u
  double beta = 0.0;       // 1 - 1^T v
  double k_pair = 0.0;     // k(xi, xi')
};

PairTerms pair_terms(const KernelSystem& sys, CostSample s, bool need_v) {
  const KernelSpec& spec = sys.spec();
  PairTerms t;
  t.k_pair = eval(spec, s.xi, s.xi_prime);
  t.a = cross(spec, s.xi, sys.points());
  t.b = cross(spec, s.xi_prime, sys.points());
  t.u = sys.solve(t.a);
  t.alpha = 1.0 - t.u.sum();
  if (need_v) {
    t.v = sys.solve(t.b);
    t.beta = 1.0 - t.v.sum();
  }
  return t;
}

}  // namespace

double cost_c(const KernelSystem& sys, CostSample s) {
  const PairTerms t = pair_terms(sys, s, true);
  return t.k_pair - t.a.dot(t.v) + t.alpha * t.beta / sys.ones_inv_ones();
}

double cost_c(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s) {
  return cost_c(KernelSystem(spec, points), s);
}

double cost_c_prime(const KernelSystem& sys, CostSample s) {
  const PairTerms t = pair_terms(sys, s, false);
  return t.k_pair - t.b.dot(t.u) + t.alpha * t.alpha / sys.ones_inv_ones();
}

double cost_c_prime(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s) {
  return cost_c_prime(KernelSystem(spec, points), s);
}

double cost_c_double_prime(const KernelSpec& spec, const Eigen::VectorXd& points,
                           const Eigen::VectorXd& mu, CostSample s) {
  if (mu.size() != points.size()) {
    throw std::invalid_argument("weight vector length does not match the support points");
  }
  const Eigen::VectorXd a = cross(spec, s.xi, points);
  const Eigen::VectorXd b = cross(spec, s.xi_prime, points);
  return eval(spec, s.xi, s.xi_prime) - mu.dot(a) - mu.dot(b) + mu.dot(gram(spec, points) * mu);
}

CostEvaluation evaluate_cost(const KernelSystem& sys, CostSample s, CostVariant variant) {
  const KernelSpec& spec = sys.spec();
  const Eigen::VectorXd& x = sys.points();
  const bool symmetric = variant == CostVariant::Symmetric;
  const PairTerms t = pair_terms(sys, s, true);
  const Eigen::VectorXd& w = sys.inv_ones();
  const double ones_k_ones = sys.ones_inv_ones();

  const Eigen::VectorXd da = cross_grad(spec, s.xi, x);
  const Eigen::VectorXd db = cross_grad(spec, s.xi_prime, x);
  const Eigen::MatrixXd g = gram_grad(spec, x);
  const Eigen::VectorXd gu = g * t.u;
  const Eigen::VectorXd gv = g * t.v;
  const Eigen::VectorXd gw = g * w;

  // d/dx_i of a^T K^-1 b (symmetric in a, b)
  const Eigen::ArrayXd d_quad = da.array() * t.v.array() + db.array() * t.u.array() -
                                t.u.array() * gv.array() - t.v.array() * gu.array();
  // d/dx_i of 1^T K^-1 a and 1^T K^-1 b
  const Eigen::ArrayXd d_sum_u = w.array() * da.array() - w.array() * gu.array() - t.u.array() * gw.array();
  const Eigen::ArrayXd d_sum_v = w.array() * db.array() - w.array() * gv.array() - t.v.array() * gw.array();
  // d/dx_i of 1^T K^-1 1
  const Eigen::ArrayXd d_s = -2.0 * w.array() * gw.array();

  CostEvaluation out;
  if (symmetric) {
    const double ab = t.alpha * t.beta;
    out.value = t.k_pair - t.a.dot(t.v) + ab / ones_k_ones;
    out.grad_points = (-d_quad - (t.beta * d_sum_u + t.alpha * d_sum_v) / ones_k_ones -
                       ab * d_s / (ones_k_ones * ones_k_ones))
                          .matrix();
  } else {
    const double aa = t.alpha * t.alpha;
    out.value = t.k_pair - t.b.dot(t.u) + aa / ones_k_ones;
    out.grad_points = (-d_quad - 2.0 * t.alpha * d_sum_u / ones_k_ones -
                       aa * d_s / (ones_k_ones * ones_k_ones))
                          .matrix();
  }
  return out;
}

Eigen::VectorXd grad_points_c(const KernelSystem& sys, CostSample s) {
  return evaluate_cost(sys, s, CostVariant::Symmetric).grad_points;
}

Eigen::VectorXd grad_points_c(const KernelSpec& spec, const Eigen::VectorXd& points, CostSample s) {
  return grad_points_c(KernelSystem(spec, points), s);
}

Eigen::VectorXd grad_points_c_prime(const KernelSystem& sys, CostSample s) {
  return evaluate_cost(sys, s, CostVariant::Asymmetric).grad_points;
}

DoublePrimeGradient evaluate_cost_double_prime(const KernelSpec& spec, const Eigen::VectorXd& points,
                                               const Eigen::VectorXd& mu, CostSample s) {
  if (mu.size() != points.size()) {
    throw std::invalid_argument("weight vector length does not match the support points");
  }
  const Eigen::VectorXd a = cross(spec, s.xi, points);
  const Eigen::VectorXd b = cross(spec, s.xi_prime, points);
  const Eigen::MatrixXd k = gram(spec, points);
  const Eigen::VectorXd k_mu = k * mu;
  const Eigen::VectorXd da = cross_grad(spec, s.xi, points);
  const Eigen::VectorXd db = cross_grad(spec, s.xi_prime, points);
  const Eigen::VectorXd g_mu = gram_grad(spec, points) * mu;

  DoublePrimeGradient out;
  out.value = eval(spec, s.xi, s.xi_prime) - mu.dot(a) - mu.dot(b) + mu.dot(k_mu);
  out.grad_points =
      (mu.array() * (2.0 * g_mu.array() - da.array() - db.array())).matrix();
  out.grad_weights = 2.0 * k_mu - a - b;
  return out;
}

double penalized_objective(const KernelSpec& spec, const Eigen::VectorXd& points,
                           const Eigen::VectorXd& mu, CostSample s) {
  const Eigen::VectorXd p = project_simplex(mu);
  return cost_c_double_prime(spec, points, p, s) + (mu - p).norm();
}

}  // namespace mmdq
