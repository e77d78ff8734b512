#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "mmdq/closedform.hpp"
#include "mmdq/cost.hpp"
#include "mmdq/distributions.hpp"
#include "mmdq/linalg.hpp"
#include "mmdq/weights.hpp"
#include "oracles.hpp"

using namespace mmdq;

namespace {

// Monte-Carlo mean of a per-pair functional under N(0,1) x N(0,1).
template <class F>
oracle::MeanEstimate mc_mean(F f, int pairs, std::uint64_t seed) {
  const auto target = TargetDistribution::normal();
  Rng rng(seed);
  std::vector<double> vals(static_cast<std::size_t>(pairs));
  for (auto& v : vals) v = f(sample_pair(target, rng));
  return oracle::mean_and_stderr(vals);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace

TEST_CASE("c at an interpolation point") {
  const KernelSpec s = KernelSpec::gaussian(0.5);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  CHECK(std::abs(cost_c(s, x, {0.3, 0.3})) <= 1e-15);
}

TEST_CASE("c is symmetric and c' differs only through the squared residual") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const KernelSpec s = k % 2 ? KernelSpec::gaussian(0.6) : KernelSpec::matern(2.5, 0.6);
    const KernelSystem sys(s, oracle::random_points(rng, 1 + k % 6));
    const double a = g(rng), b = g(rng);
    CHECK(std::abs(cost_c(sys, {a, b}) - cost_c(sys, {b, a})) <= 1e-14);
    CHECK(std::abs(cost_c_prime(sys, {a, a}) - cost_c(sys, {a, a})) <= 1e-12);
    // c' squares the first residual instead of pairing the two, so after
    // symmetrization the gap is (alpha - beta)^2 / (2 1'K^-1 1), never negative
    const Eigen::MatrixXd kmat = sys.matrix();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.points().size());
    const double s1 = ones.dot(oracle::lu_solve(kmat, ones));
    const double alpha = 1.0 - ones.dot(oracle::lu_solve(kmat, cross(s, a, sys.points())));
    const double beta = 1.0 - ones.dot(oracle::lu_solve(kmat, cross(s, b, sys.points())));
    const double sym_c = 0.5 * (cost_c(sys, {a, b}) + cost_c(sys, {b, a}));
    const double sym_cp = 0.5 * (cost_c_prime(sys, {a, b}) + cost_c_prime(sys, {b, a}));
    CHECK(std::abs(sym_cp - sym_c - (alpha - beta) * (alpha - beta) / (2.0 * s1)) <= 1e-12);
  }
}

TEST_CASE("c'' values") {
  const KernelSpec s = KernelSpec::matern(1.5, 0.4);
  const Eigen::Vector3d x(-0.5, 0.1, 0.8);
  CHECK(cost_c_double_prime(s, x, Eigen::VectorXd::Zero(3), {0.2, -0.4}) == eval(s, 0.2, -0.4));
  CHECK(std::abs(cost_c_double_prime(s, Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Ones(1), {0.7, 0.7})) <=
        1e-15);
}

TEST_CASE("penalized objective") {
  const KernelSpec s = KernelSpec::gaussian(0.5);
  const Eigen::Vector2d x(-0.3, 0.4);
  const CostSample smp{0.1, -0.2};
  const Eigen::Vector2d inside(0.3, 0.7);
  CHECK(penalized_objective(s, x, inside, smp) == cost_c_double_prime(s, x, inside, smp));
  const Eigen::Vector2d outside(2.0, -1.0);
  CHECK(penalized_objective(s, x, outside, smp) ==
        doctest::Approx(cost_c_double_prime(s, x, Eigen::Vector2d(1.0, 0.0), smp) + std::sqrt(2.0)).epsilon(1e-15));
  std::mt19937_64 rng(67);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector2d mu(g(rng), g(rng));
    const Eigen::VectorXd p = project_simplex(mu);
    CHECK(penalized_objective(s, x, mu, smp) == cost_c_double_prime(s, x, p, smp) + (mu - p).norm());
  }
}

TEST_CASE("gradient of c matches finite differences") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const KernelSpec s = k < 50 ? KernelSpec::gaussian(0.8) : KernelSpec::matern(2.5, 0.8);
    const Eigen::VectorXd x = oracle::random_points(rng, 4, -2.0, 2.0, 0.3);
    const CostSample smp{g(rng), g(rng)};
    const Eigen::VectorXd fd = fd_gradient([&](const Eigen::VectorXd& y) { return cost_c(s, y, smp); }, x, 1e-5);
    CHECK(rel_err(grad_points_c(s, x, smp), fd) <= 1e-5);
    const KernelSystem sys(s, x);
    const Eigen::VectorXd fdp =
        fd_gradient([&](const Eigen::VectorXd& y) { return cost_c_prime(s, y, smp); }, x, 1e-5);
    CHECK(rel_err(grad_points_c_prime(sys, smp), fdp) <= 1e-5);
    const auto ev = evaluate_cost(sys, smp, CostVariant::Asymmetric);
    CHECK(ev.value == doctest::Approx(cost_c_prime(sys, smp)).epsilon(1e-13));
    CHECK(rel_err(ev.grad_points, grad_points_c_prime(sys, smp)) <= 1e-12);
    const auto evs = evaluate_cost(sys, smp, CostVariant::Symmetric);
    CHECK(evs.value == doctest::Approx(cost_c(sys, smp)).epsilon(1e-13));
    CHECK(rel_err(evs.grad_points, grad_points_c(sys, smp)) <= 1e-12);
  }
}

TEST_CASE("gradient of c'' matches finite differences") {
  std::mt19937_64 rng(73);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const KernelSpec s = KernelSpec::matern(2.5, 0.7);
    const Eigen::VectorXd x = oracle::random_points(rng, 4);
    Eigen::VectorXd mu(4);
    for (auto& v : mu) v = g(rng);
    const CostSample smp{g(rng), g(rng)};
    const auto d = evaluate_cost_double_prime(s, x, mu, smp);
    CHECK(d.value == doctest::Approx(cost_c_double_prime(s, x, mu, smp)).epsilon(1e-13));
    const Eigen::VectorXd fx = fd_gradient([&](const Eigen::VectorXd& y) { return cost_c_double_prime(s, y, mu, smp); }, x, 1e-6);
    const Eigen::VectorXd fm = fd_gradient([&](const Eigen::VectorXd& w) { return cost_c_double_prime(s, x, w, smp); }, mu, 1e-6);
    CHECK(rel_err(d.grad_points, fx) <= 1e-6);
    CHECK(rel_err(d.grad_weights, fm) <= 1e-6);
  }
}

TEST_CASE("symmetric configuration gives an antisymmetric gradient") {
  const KernelSpec s = KernelSpec::gaussian(0.5);
  Eigen::VectorXd x(5);
  x << -2.0, -0.9, 0.0, 0.9, 2.0;
  const Eigen::VectorXd gr = grad_points_c(s, x, {-0.7, 0.7});
  CHECK(oracle::max_abs(gr + gr.reverse().eval()) <= 1e-10);
}

TEST_CASE("expectations of c, c' and c''") {
  const NormalTargetSpec t{0.0, 1.0, 0.5};
  const KernelSpec s = t.kernel();
  const Eigen::Vector3d x(-1.0, 0.0, 1.0);
  const KernelSystem sys(s, x);
  const EmbeddingModel model(TargetDistribution::normal(), s);
  const Eigen::VectorXd m = model.embedding(x);
  const double exact = optimal_mmd_sq_probability(sys, m, model.self_energy());
  CHECK(exact == doctest::Approx(closed_mmd_sq(t, x, WeightKind::SumToOne)).epsilon(1e-12));

  const auto ec = mc_mean([&](CostSample p) { return cost_c(sys, p); }, 1'000'000, 101);
  const auto ecp = mc_mean([&](CostSample p) { return cost_c_prime(sys, p); }, 1'000'000, 202);
  CHECK(std::abs(ec.mean - exact) <= 3 * ec.stderr_);
  // c' is not unbiased: E[alpha^2] replaces E[alpha]^2, so its mean sits
  // above the MMD^2 by Var(alpha) / 1'K^-1 1 with alpha = 1 - 1'K^-1 k(xi, x)
  const auto d = TargetDistribution::normal();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd k1 = oracle::lu_solve(sys.matrix(), ones);
  auto alpha = [&](double xi) { return 1.0 - k1.dot(cross(s, xi, x)); };
  const double ea = oracle::integrate_line([&](double xi) { return d.pdf(xi) * alpha(xi); });
  const double ea2 = oracle::integrate_line([&](double xi) { return d.pdf(xi) * alpha(xi) * alpha(xi); });
  const double bias = (ea2 - ea * ea) / k1.sum();
  CHECK(bias > 0.0);
  CHECK(std::abs(ecp.mean - exact - bias) <= 3 * ecp.stderr_);
  CHECK(std::abs(ecp.mean - ec.mean) > 3 * std::hypot(ec.stderr_, ecp.stderr_));
  CHECK(ec.mean >= -3 * ec.stderr_);

  const Eigen::VectorXd p = sum_to_one_weights(sys, m).weights;
  const auto edp = mc_mean([&](CostSample q) { return cost_c_double_prime(s, x, p, q); }, 1'000'000, 303);
  CHECK(std::abs(edp.mean - mmd_sq(sys, m, model.self_energy(), p)) <= 3 * edp.stderr_);
}

TEST_CASE("expected gradient vanishes at the deterministic optimum") {
  const NormalTargetSpec t{0.0, 1.0, 0.5};
  const auto opt = deterministic_optimize(t, 3, WeightKind::SumToOne);
  const KernelSystem sys(t.kernel(), opt.quantization.points);
  const auto target = TargetDistribution::normal();
  Rng rng(404);
  const int pairs = 100'000;
  std::vector<std::vector<double>> comps(3, std::vector<double>(pairs));
  for (int k = 0; k < pairs; ++k) {
    const Eigen::VectorXd gr = grad_points_c(sys, sample_pair(target, rng));
    for (int i = 0; i < 3; ++i) comps[i][k] = gr[i];
  }
  double norm2 = 0.0, se2 = 0.0;
  for (const auto& c : comps) {
    const auto e = oracle::mean_and_stderr(c);
    norm2 += e.mean * e.mean;
    se2 += e.stderr_ * e.stderr_;
  }
  CHECK(std::sqrt(norm2) <= 3 * std::sqrt(se2));
}
