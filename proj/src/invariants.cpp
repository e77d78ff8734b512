#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "mmdq/closedform.hpp"
#include "mmdq/cost.hpp"
#include "mmdq/experiment.hpp"
#include "mmdq/linalg.hpp"
#include "mmdq/weights.hpp"

namespace mmdq {
namespace {

constexpr int kInstances = 20;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Random distinct points in [-3, 3], at least 0.05 apart.
Eigen::VectorXd random_points(Rng& rng, int n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    bool ok = false;
    while (!ok) {
      x[i] = u(rng);
      ok = true;
      for (int j = 0; j < i; ++j) ok = ok && std::abs(x[i] - x[j]) > 0.05;
    }
  }
  return x;
}

KernelSpec random_kernel(Rng& rng) {
  const double nus[] = {0.5, 1.5, 2.5, INFINITY};
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> ell(0.3, 1.5);
  return KernelSpec::matern(nus[pick(rng)], ell(rng));
}

CheckResult check(std::string name, const std::function<double()>& worst, double tol) {
  CheckResult r{std::move(name), false, {}};
  try {
    const double w = worst();
    r.passed = w <= tol;
    r.detail = "worst " + sci(w) + " (tol " + sci(tol) + ")";
  } catch (const std::exception& e) {
    r.detail = std::string("exception: ") + e.what();
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng(seed);
  const auto normal = TargetDistribution::normal();

  out.push_back(check("kernel symmetry and positivity", [&] {
    double worst = 0.0;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 200; ++k) {
      const KernelSpec s = random_kernel(rng);
      const double x = u(rng), y = u(rng);
      const double a = eval(s, x, y), b = eval(s, y, x);
      worst = std::max(worst, std::abs(a - b));
      if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
    }
    return worst;
  }, 0.0));

  out.push_back(check("kernel integrates to one", [&] {
    double worst = 0.0;
    for (double ell : {0.1, 0.5}) {
      for (double nu : {0.5, 2.5, static_cast<double>(INFINITY)}) {
        worst = std::max(worst, std::abs(unit_integral_check(KernelSpec::matern(nu, ell)) - 1.0));
      }
    }
    return worst;
  }, 1e-6));

  out.push_back(check("sum-to-one weights sum to one", [&] {
    double worst = 0.0;
    for (int k = 0; k < kInstances; ++k) {
      const KernelSpec s = random_kernel(rng);
      const KernelSystem sys(s, random_points(rng, 2 + k % 8));
      const EmbeddingModel model(normal, s);
      const auto q = sum_to_one_weights(sys, model.embedding(sys.points()));
      worst = std::max(worst, std::abs(q.weights.sum() - 1.0));
    }
    return worst;
  }, 1e-12));

  out.push_back(check("penalty identity", [&] {
    double worst = 0.0;
    for (int k = 0; k < kInstances; ++k) {
      const KernelSpec s = random_kernel(rng);
      const KernelSystem sys(s, random_points(rng, 2 + k % 8));
      const EmbeddingModel model(normal, s);
      const Eigen::VectorXd m = model.embedding(sys.points());
      const double e = model.self_energy();
      const double excess = sys.solve(m).sum() - 1.0;
      const double lhs = optimal_mmd_sq_probability(sys, m, e) - optimal_mmd_sq_signed(sys, m, e);
      worst = std::max(worst, std::abs(lhs - excess * excess / sys.ones_inv_ones()));
    }
    return worst;
  }, 1e-10));

  out.push_back(check("simplex projection lands in the simplex and is idempotent", [&] {
    double worst = 0.0;
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXd v(7);
      for (auto& c : v) c = g(rng);
      const Eigen::VectorXd p = project_simplex(v);
      worst = std::max({worst, std::abs(p.sum() - 1.0), std::max(0.0, -p.minCoeff()),
                        (project_simplex(p) - p).cwiseAbs().maxCoeff()});
    }
    return worst;
  }, 1e-12));

  out.push_back(check("active-set weights are feasible and KKT", [&] {
    double worst = 0.0;
    const auto uniform = TargetDistribution::uniform();
    for (int k = 0; k < kInstances; ++k) {
      const KernelSpec s = KernelSpec::gaussian(0.5);
      const KernelSystem sys(s, random_points(rng, 3 + k % 6));
      const EmbeddingModel model(uniform, s);
      const Eigen::VectorXd m = model.embedding(sys.points());
      const auto sol = simplex_weights(sys, m);
      const Eigen::VectorXd& p = sol.quantization.weights;
      worst = std::max({worst, std::abs(p.sum() - 1.0), std::max(0.0, -p.minCoeff())});
      if (sol.multipliers.size() > 0) worst = std::max(worst, std::max(0.0, -sol.multipliers.minCoeff()));
    }
    return worst;
  }, 1e-10));

  out.push_back(check("closed-form and generic MMD agree", [&] {
    double worst = 0.0;
    for (int k = 0; k < kInstances; ++k) {
      const NormalTargetSpec t{0.0, 1.0, 0.5};
      const KernelSystem sys(t.kernel(), random_points(rng, 2 + k % 6));
      const EmbeddingModel model(normal, t.kernel());
      const double generic =
          optimal_mmd_sq_probability(sys, model.embedding(sys.points()), model.self_energy());
      worst = std::max(worst, std::abs(generic - closed_mmd_sq(t, sys.points(), WeightKind::SumToOne)));
    }
    return worst;
  }, 1e-12));

  out.push_back(check("closed-form gradient matches finite differences", [&] {
    double worst = 0.0;
    const NormalTargetSpec t{0.0, 1.0, 0.5};
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd x = random_points(rng, 4);
      const Eigen::VectorXd g = closed_mmd_grad(t, x, WeightKind::SumToOne);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-5;
        Eigen::VectorXd a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const double fd =
            (closed_mmd_sq(t, a, WeightKind::SumToOne) - closed_mmd_sq(t, b, WeightKind::SumToOne)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-3, std::abs(g[i])));
      }
    }
    return worst;
  }, 1e-5));

  out.push_back(check("sgd runs are reproducible", [&] {
    SgdConfig cfg;
    cfg.max_iters = 2000;
    cfg.seed = seed;
    const KernelSpec s = KernelSpec::gaussian(0.5);
    const auto a = sgd_quantize(s, normal, cfg, quantile_init(normal, 5));
    const auto b = sgd_quantize(s, normal, cfg, quantile_init(normal, 5));
    const bool same = a.state.points == b.state.points && a.running_mmd_sq == b.running_mmd_sq &&
                      a.quantization.weights == b.quantization.weights;
    return same ? 0.0 : 1.0;
  }, 0.0));

  out.push_back(check("points.csv round-trips", [&] {
    const Eigen::VectorXd x = random_points(rng, 6);
    const Eigen::VectorXd p = project_simplex(random_points(rng, 6));
    const auto file = std::filesystem::temp_directory_path() /
                      ("mmdq_check_" + std::to_string(seed) + "_points.csv");
    write_points_csv(file, x, p);
    const PointsTable t = read_points_csv(file);
    std::filesystem::remove(file);
    return std::max((t.x - x).cwiseAbs().maxCoeff(), (t.p - p).cwiseAbs().maxCoeff());
  }, 0.0));

  return out;
}

}  // namespace mmdq
