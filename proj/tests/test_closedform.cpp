#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "mmdq/closedform.hpp"
#include "mmdq/error.hpp"
#include "mmdq/cost.hpp"
#include "mmdq/distributions.hpp"
#include "mmdq/linalg.hpp"
#include "oracles.hpp"

using namespace mmdq;

namespace {
const NormalTargetSpec kStd{0.0, 1.0, 0.5};
}

TEST_CASE("embedding") {
  CHECK(embedding_at(kStd, 0.0) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * 1.25)).epsilon(1e-15));
  CHECK(embedding_at(kStd, 0.0) == doctest::Approx(0.3568248).epsilon(1e-7));
  CHECK(embedding_at(kStd, 60.0) == 0.0);
  CHECK(embedding_at(kStd, -60.0) == 0.0);

  const auto target = TargetDistribution::normal();
  Rng rng(5);
  std::vector<double> v(10'000'000);
  for (auto& s : v) s = eval(kStd.kernel(), target.sample(rng), 1.0);
  const auto e = oracle::mean_and_stderr(v);
  CHECK(std::abs(e.mean - embedding_at(kStd, 1.0)) <= 3 * e.stderr_);

  const double fd = oracle::central_difference([](double x) { return embedding_at(kStd, x); }, 0.7, 1e-6);
  CHECK(embedding_grad(kStd, 0.7) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("self energy") {
  CHECK(self_energy(kStd) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * 2.25)).epsilon(1e-15));
  CHECK(self_energy(kStd) == doctest::Approx(0.2659615).epsilon(1e-7));
  CHECK(self_energy({0.0, 1e-9, 0.5}) == doctest::Approx(peak(KernelSpec::gaussian(0.5))).epsilon(1e-12));
  const NormalTargetSpec t{0.4, 0.7, 0.3};
  const auto d = TargetDistribution::normal(0.4, 0.7);
  const double q = oracle::integrate_line(
      [&](double x) {
        return d.pdf(x) * oracle::integrate_line([&](double y) { return d.pdf(y) * eval(t.kernel(), x, y); }, x);
      },
      0.4);
  CHECK(std::abs(self_energy(t) - q) <= 1e-8);
}

TEST_CASE("closed-form MMD") {
  SUBCASE("single point by hand") {
    const double signed_val = closed_mmd_sq(kStd, Eigen::VectorXd::Zero(1), WeightKind::Signed);
    const double pk = 1.0 / std::sqrt(2 * std::numbers::pi * 1.25);
    const double k0 = 1.0 / std::sqrt(2 * std::numbers::pi * 0.25);
    const double s = 1.0 / std::sqrt(2 * std::numbers::pi * 2.25);
    CHECK(signed_val == doctest::Approx(s - pk * pk / k0).epsilon(1e-14));
    CHECK(signed_val == doctest::Approx(0.1063846081).epsilon(1e-9));
  }
  SUBCASE("agrees with the generic path and orders") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
      const NormalTargetSpec t{0.3, 0.8, 0.4};
      const Eigen::VectorXd x = oracle::random_points(rng, 1 + k % 7);
      const KernelSystem sys(t.kernel(), x);
      const EmbeddingModel model(TargetDistribution::normal(0.3, 0.8), t.kernel());
      const Eigen::VectorXd m = model.embedding(x);
      const double so = closed_mmd_sq(t, x, WeightKind::SumToOne);
      const double sg = closed_mmd_sq(t, x, WeightKind::Signed);
      CHECK(std::abs(so - optimal_mmd_sq_probability(sys, m, model.self_energy())) <= 1e-12);
      CHECK(std::abs(sg - optimal_mmd_sq_signed(sys, m, model.self_energy())) <= 1e-12);
      CHECK(sg <= so);
      CHECK(sg >= -1e-12);
    }
  }
  SUBCASE("monte carlo mean of c at five equispaced points") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -2.0, 2.0);
    const KernelSystem sys(kStd.kernel(), x);
    const auto target = TargetDistribution::normal();
    Rng rng(8);
    std::vector<double> v(1'000'000);
    for (auto& c : v) c = cost_c(sys, sample_pair(target, rng));
    const auto e = oracle::mean_and_stderr(v);
    CHECK(std::abs(e.mean - closed_mmd_sq(kStd, x, WeightKind::SumToOne)) <= 3 * e.stderr_);
  }
  CHECK_THROWS_AS(closed_mmd_sq(kStd, Eigen::VectorXd::Zero(2), WeightKind::Signed), DegeneratePoints);
  CHECK_THROWS_AS(closed_mmd_sq(kStd, Eigen::VectorXd::Zero(1), WeightKind::Simplex), std::invalid_argument);
}

TEST_CASE("closed-form gradient") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const NormalTargetSpec t{0.2, 1.1, 0.6};
    const Eigen::VectorXd x = oracle::random_points(rng, 2 + k % 5, -2.5, 2.5, 0.2);
    for (WeightKind mode : {WeightKind::Signed, WeightKind::SumToOne}) {
      const Eigen::VectorXd g = closed_mmd_grad(t, x, mode);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_difference(
            [&](double v) {
              Eigen::VectorXd y = x;
              y[i] = v;
              return closed_mmd_sq(t, y, mode);
            },
            x[i], 1e-5);
        CHECK(std::abs(fd - g[i]) <= 1e-7 * std::max(oracle::max_abs(g), 1e-6));
      }
    }
  }
  Eigen::VectorXd sym(4);
  sym << -1.5, -0.4, 0.4, 1.5;
  const Eigen::VectorXd g = closed_mmd_grad(kStd, sym, WeightKind::SumToOne);
  CHECK(oracle::max_abs(g + g.reverse().eval()) <= 1e-14);
}

TEST_CASE("deterministic optimizer") {
  SUBCASE("one point sits at the mean") {
    const auto r = deterministic_optimize(kStd, 1, WeightKind::SumToOne);
    CHECK(std::abs(r.quantization.points[0]) <= 1e-6);
    CHECK(r.quantization.weights[0] == 1.0);
  }
  SUBCASE("two points match a grid search") {
    const auto r = deterministic_optimize(kStd, 2, WeightKind::SumToOne);
    REQUIRE(r.converged);
    const Eigen::VectorXd& x = r.quantization.points;
    CHECK(x[0] == doctest::Approx(-x[1]).epsilon(1e-8));
    const double a = std::abs(x[0]);
    CHECK(a > 0.0);
    double best = INFINITY, bx = 0, by = 0;
    const int res = 2001;
    for (int i = 0; i < res; ++i) {
      for (int j = i + 1; j < res; ++j) {
        const Eigen::Vector2d y(-3.0 + 6.0 * i / (res - 1), -3.0 + 6.0 * j / (res - 1));
        const double v = closed_mmd_sq(kStd, y, WeightKind::SumToOne);
        if (v < best) {
          best = v;
          bx = y[0];
          by = y[1];
        }
      }
    }
    const double h = 6.0 / (res - 1);
    CHECK(std::abs(bx - std::min(x[0], x[1])) <= h);
    CHECK(std::abs(by - std::max(x[0], x[1])) <= h);
    CHECK(r.mmd * r.mmd <= best + 1e-15);
  }
  SUBCASE("more points help") {
    const double m1 = deterministic_optimize(kStd, 1, WeightKind::SumToOne).mmd;
    const auto r2 = deterministic_optimize(kStd, 2, WeightKind::SumToOne);
    const auto r5 = deterministic_optimize(kStd, 5, WeightKind::SumToOne);
    CHECK(r5.mmd < r2.mmd);
    CHECK(r2.mmd < m1);
    CHECK(r5.grad_norm <= 1e-6);
    CHECK(r5.quantization.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("translation equivariance") {
    const double delta = 1.7;
    const auto base = deterministic_optimize(kStd, 4, WeightKind::SumToOne);
    const NormalTargetSpec shifted{delta, 1.0, 0.5};
    const Eigen::VectorXd init = [&] {
      Eigen::VectorXd v(4);
      for (int i = 0; i < 4; ++i) v[i] = delta + oracle::normal_quantile((i + 0.5) / 4);
      return v;
    }();
    const auto moved = deterministic_optimize(shifted, 4, WeightKind::SumToOne, init);
    CHECK(oracle::max_abs(moved.quantization.points - base.quantization.points -
                          Eigen::VectorXd::Constant(4, delta)) <= 1e-6);
    CHECK(std::abs(moved.mmd - base.mmd) <= 1e-8);
  }
  SUBCASE("symmetric init stays symmetric") {
    Eigen::VectorXd init(6);
    init << -2.0, -1.0, -0.3, 0.3, 1.0, 2.0;
    const auto r = deterministic_optimize(kStd, 6, WeightKind::Signed, init);
    const Eigen::VectorXd& x = r.quantization.points;
    CHECK(oracle::max_abs(x + x.reverse().eval()) <= 1e-10);
  }
  CHECK_THROWS_AS(deterministic_optimize(kStd, 0, WeightKind::SumToOne), std::invalid_argument);
}
