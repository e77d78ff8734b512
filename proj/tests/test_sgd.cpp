#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "mmdq/closedform.hpp"
#include "mmdq/error.hpp"
#include "mmdq/linalg.hpp"
#include "mmdq/sgd.hpp"
#include "oracles.hpp"

using namespace mmdq;

namespace {

const NormalTargetSpec kStd{0.0, 1.0, 0.5};

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("learning rate schedule") {
  const SgdConfig cfg;
  CHECK(cfg.learning_rate(0) == 1.0 / 100.0);
  CHECK(cfg.learning_rate(1) == 1.0 / 101.0);
  CHECK(cfg.learning_rate(2) == 1.0 / 102.0);
}

TEST_CASE("config validation") {
  SgdConfig cfg;
  cfg.lr_offset = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_points = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_points = 2;
  CHECK_THROWS_AS(sgd_quantize(kStd.kernel(), TargetDistribution::normal(), cfg, Eigen::Vector2d(0.1, 0.1)),
                  DegeneratePoints);
  CHECK_THROWS_AS(sgd_quantize(kStd.kernel(), TargetDistribution::normal(), cfg, Eigen::Vector3d(0.1, 0.2, 0.3)),
                  std::invalid_argument);
}

TEST_CASE("quantile initialization") {
  const Eigen::VectorXd x = quantile_init(TargetDistribution::uniform(), 4);
  CHECK(x[0] == doctest::Approx(0.125));
  CHECK(x[3] == doctest::Approx(0.875));
  CHECK(quantile_init(TargetDistribution::normal(), 1)[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero iterations returns the init with bordered weights") {
  SgdConfig cfg;
  cfg.n_points = 3;
  cfg.max_iters = 0;
  const Eigen::Vector3d init(-1.0, 0.2, 1.0);
  const auto r = sgd_quantize(kStd.kernel(), TargetDistribution::normal(), cfg, init);
  CHECK(r.quantization.points == Eigen::VectorXd(init));
  const KernelSystem sys(kStd.kernel(), init);
  Eigen::VectorXd m(3);
  for (int i = 0; i < 3; ++i) m[i] = embedding_at(kStd, init[i]);
  CHECK(oracle::max_abs(r.quantization.weights - oracle::nullspace_qp(sys.matrix(), m)) <= 1e-12);
  CHECK(r.quantization.kind == WeightKind::SumToOne);
}

TEST_CASE("running estimators") {
  SgdConfig cfg;
  cfg.n_points = 3;
  cfg.max_iters = 5000;
  cfg.stop_rel_tol = 0.0;
  cfg.record_costs = true;
  cfg.seed = 3;
  const auto target = TargetDistribution::normal();
  const auto r = sgd_quantize(kStd.kernel(), target, cfg, quantile_init(target, 3));
  REQUIRE(r.costs.size() == 5000);
  double mean = 0.0;
  for (double c : r.costs) mean += c;
  mean /= 5000.0;
  CHECK(std::abs(r.running_mmd_sq - mean) <= 1e-12);
  CHECK(r.state.iter == 5000);
  CHECK(r.status == SgdStatus::MaxIters);
  CHECK(r.trace.front().t == 0);
  CHECK(r.trace.back().t == 5000);
  CHECK(r.trace.size() == 51);
  CHECK(r.state.running_m.size() == 3);
  CHECK((r.state.running_m.array() > 0.0).all());
}

TEST_CASE("identical seeds give identical runs") {
  SgdConfig cfg;
  cfg.n_points = 4;
  cfg.max_iters = 3000;
  cfg.seed = 77;
  const auto target = TargetDistribution::exponential();
  const KernelSpec s = KernelSpec::matern(2.5, 0.5);
  const auto a = sgd_quantize(s, target, cfg, quantile_init(target, 4));
  const auto b = sgd_quantize(s, target, cfg, quantile_init(target, 4));
  CHECK(a.quantization.points == b.quantization.points);
  CHECK(a.quantization.weights == b.quantization.weights);
  CHECK(a.running_mmd_sq == b.running_mmd_sq);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].points == b.trace[i].points);
  cfg.seed = 78;
  const auto c = sgd_quantize(s, target, cfg, quantile_init(target, 4));
  CHECK(c.quantization.points != a.quantization.points);
}

TEST_CASE("one point converges to the centre") {
  SgdConfig cfg;
  cfg.n_points = 1;
  cfg.seed = 7;
  const auto target = TargetDistribution::normal();
  const auto r = sgd_quantize(kStd.kernel(), target, cfg, Eigen::VectorXd::Constant(1, 0.8));
  CHECK(std::abs(r.quantization.points[0]) <= 0.05);
}

TEST_CASE("descent makes progress and more points help") {
  const auto target = TargetDistribution::normal();
  std::vector<double> mmds;
  for (int n : {1, 2, 5}) {
    SgdConfig cfg;
    cfg.n_points = n;
    cfg.seed = 11;
    cfg.stop_rel_tol = 0.0;
    cfg.trace_stride = 10;
    const auto r = sgd_quantize(kStd.kernel(), target, cfg, quantile_init(target, n));
    mmds.push_back(std::sqrt(closed_mmd_sq(kStd, r.quantization.points, WeightKind::SumToOne)));
    if (n == 5) {
      std::vector<double> running;
      for (const auto& e : r.trace) running.push_back(e.running_mmd_sq);
      const std::size_t tenth = running.size() / 10;
      const std::vector<double> first(running.begin() + 1, running.begin() + static_cast<long>(tenth));
      const std::vector<double> last(running.end() - static_cast<long>(tenth), running.end());
      CHECK(median(last) <= median(first));
    }
  }
  CHECK(mmds[2] < mmds[1]);
  CHECK(mmds[1] < mmds[0]);
}

TEST_CASE("early stop") {
  SgdConfig cfg;
  cfg.n_points = 3;
  cfg.stop_rel_tol = 0.05;
  cfg.stop_window = 500;
  const auto target = TargetDistribution::uniform();
  const auto r = sgd_quantize(KernelSpec::gaussian(0.5), target, cfg, quantile_init(target, 3));
  CHECK(r.status == SgdStatus::Stalled);
  CHECK(r.state.iter < cfg.max_iters);
  CHECK(r.state.iter % 500 == 0);
}

TEST_CASE("asymmetric cost also descends") {
  SgdConfig cfg;
  cfg.n_points = 3;
  cfg.cost_variant = CostVariant::Asymmetric;
  cfg.max_iters = 20000;
  const auto target = TargetDistribution::normal();
  const Eigen::Vector3d init(-0.3, 0.0, 0.3);
  const auto r = sgd_quantize(kStd.kernel(), target, cfg, init);
  CHECK(closed_mmd_sq(kStd, r.quantization.points, WeightKind::SumToOne) <
        closed_mmd_sq(kStd, init, WeightKind::SumToOne));
}

TEST_CASE("penalized joint descent") {
  const auto target = TargetDistribution::normal();
  SUBCASE("zero iterations projects the initial weights") {
    SgdConfig cfg;
    cfg.n_points = 2;
    cfg.max_iters = 0;
    const auto r = sgd_quantize_penalized(kStd.kernel(), target, cfg, Eigen::Vector2d(-1, 1), Eigen::Vector2d(2.0, -1.0));
    CHECK(r.quantization.weights == project_simplex(Eigen::Vector2d(2.0, -1.0)));
    CHECK(r.quantization.kind == WeightKind::Simplex);
  }
  SUBCASE("interior optimum keeps the penalty at zero and matches the two-stage path") {
    SgdConfig cfg;
    cfg.n_points = 3;
    cfg.seed = 5;
    cfg.max_iters = 100'000;
    const Eigen::VectorXd init = quantile_init(target, 3);
    const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    const auto r = sgd_quantize_penalized(kStd.kernel(), target, cfg, init, mu0);
    // noise can push mu briefly out of the simplex, never far
    CHECK(r.max_penalty <= 1e-3);
    CHECK(std::abs(r.quantization.weights.sum() - 1.0) <= 1e-12);
    const auto two_stage = sgd_quantize(kStd.kernel(), target, cfg, init);
    const KernelSystem sa(kStd.kernel(), r.quantization.points);
    const KernelSystem sb(kStd.kernel(), two_stage.quantization.points);
    auto emb = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd m(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) m[i] = embedding_at(kStd, x[i]);
      return m;
    };
    const double a = std::sqrt(mmd_sq(sa, emb(r.quantization.points), self_energy(kStd), r.quantization.weights));
    const auto sb_w = simplex_weights(sb, emb(two_stage.quantization.points)).quantization.weights;
    const double b = std::sqrt(mmd_sq(sb, emb(two_stage.quantization.points), self_energy(kStd), sb_w));
    CHECK(std::abs(a - b) <= 0.05 * b);
  }
  SUBCASE("concentrated target drives the far weight to the active-set value") {
    // a narrow normal at 0 and one point far out in its tail: the far weight
    // starts at 0.5 and must fall to the oracle's near-zero value
    const auto narrow = TargetDistribution::normal(0.0, 0.01);
    const KernelSpec s = KernelSpec::gaussian(0.2);
    SgdConfig cfg;
    cfg.n_points = 2;
    cfg.seed = 9;
    cfg.max_iters = 20000;
    const auto r = sgd_quantize_penalized(s, narrow, cfg, Eigen::Vector2d(0.0, 1.5), Eigen::Vector2d(0.5, 0.5));
    const KernelSystem sys(s, r.quantization.points);
    const EmbeddingModel model(narrow, s);
    const auto oracle_w = oracle::enumerate_active_sets(sys.matrix(), model.embedding(r.quantization.points)).p;
    CHECK(r.quantization.weights[1] < 1e-3);
    CHECK(oracle::max_abs(r.quantization.weights - oracle_w) <= 1e-5);
  }
}
