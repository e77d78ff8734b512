#include "mmdq/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mmdq/error.hpp"
#include "mmdq/linalg.hpp"

namespace mmdq {
namespace {

constexpr double kCollisionGap = 1e-9;
constexpr double kNudge = 1e-6;  // times ell

// Pushes points closer than kCollisionGap apart; returns the number of nudges.
long separate_points(Eigen::VectorXd& x, double ell) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&x](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  long nudges = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double lower = x[order[k - 1]];
    if (x[order[k]] - lower < kCollisionGap) {
      x[order[k]] = lower + kNudge * ell;
      ++nudges;
    }
  }
  return nudges;
}

bool should_stop(const SgdConfig& cfg, long done, double current, double& checkpoint) {
  if (cfg.stop_rel_tol <= 0.0 || done % cfg.stop_window != 0) {
    return false;
  }
  const bool ready = done >= 2 * cfg.stop_window;
  const double previous = checkpoint;
  checkpoint = current;
  if (!ready) {
    return false;
  }
  const double scale = std::max(std::abs(current), 1e-300);
  return std::abs(current - previous) / scale < cfg.stop_rel_tol;
}

// Projection Jacobian of the simplex projection applied to g.
Eigen::VectorXd projection_jacobian_apply(const Eigen::VectorXd& p, const Eigen::VectorXd& g) {
  double sum = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      sum += g[i];
      ++support;
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.size());
  const double mean = support > 0 ? sum / support : 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out[i] = g[i] - mean;
  }
  return out;
}

void check_init(const SgdConfig& cfg, const KernelSpec& spec, const Eigen::VectorXd& init) {
  cfg.validate();
  spec.validate();
  if (init.size() != cfg.n_points) {
    throw std::invalid_argument("initial points must have n_points entries");
  }
  require_distinct(init);
}

}  // namespace

void SgdConfig::validate() const {
  if (n_points < 1) throw std::invalid_argument("n_points must be at least 1");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (!(lr_offset > 0.0) || !(lr_scale > 0.0)) {
    throw std::invalid_argument("learning-rate constants must be positive");
  }
  if (stop_window < 1) throw std::invalid_argument("stop_window must be positive");
  if (!(stop_rel_tol >= 0.0)) throw std::invalid_argument("stop_rel_tol must be non-negative");
  if (trace_stride < 1) throw std::invalid_argument("trace_stride must be positive");
}

std::string_view to_string(SgdStatus status) {
  switch (status) {
    case SgdStatus::MaxIters:
      return "max_iters";
    case SgdStatus::Stalled:
      return "stalled";
    case SgdStatus::Aborted:
      return "aborted";
  }
  return "unknown";
}

Eigen::VectorXd quantile_init(const TargetDistribution& target, int n) {
  if (n < 1) throw std::invalid_argument("need at least one point");
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    x[i] = target.quantile((i + 0.5) / n);
  }
  return x;
}

SgdResult sgd_quantize(const KernelSpec& spec, const TargetDistribution& target,
                       const SgdConfig& cfg, const Eigen::VectorXd& init) {
  check_init(cfg, spec, init);
  SgdResult out;
  SgdState& st = out.state;
  st.points = init;
  st.running_m = Eigen::VectorXd::Zero(init.size());
  st.rng.seed(cfg.seed);
  out.trace.push_back({0, 0.0, st.points});
  if (cfg.record_costs) {
    out.costs.reserve(static_cast<std::size_t>(cfg.max_iters));
  }

  double checkpoint = 0.0;
  for (long t = 0; t < cfg.max_iters; ++t) {
    CostEvaluation ev;
    const CostSample s = sample_pair(target, st.rng);
    try {
      const KernelSystem sys(spec, st.points);
      ev = evaluate_cost(sys, s, cfg.cost_variant);
    } catch (const Error& e) {
      out.status = SgdStatus::Aborted;
      out.message = e.what();
      break;
    }
    if (!std::isfinite(ev.value) || !ev.grad_points.allFinite()) {
      out.status = SgdStatus::Aborted;
      out.message = "non-finite cost or gradient at iteration " + std::to_string(t);
      break;
    }
    const double tt = static_cast<double>(t);
    st.running_mmd_sq = (tt * st.running_mmd_sq + ev.value) / (tt + 1.0);
    if (cfg.record_costs) out.costs.push_back(ev.value);

    st.points -= cfg.learning_rate(t) * ev.grad_points;
    out.collisions += separate_points(st.points, spec.ell);

    const Eigen::VectorXd fresh =
        0.5 * (cross(spec, s.xi, st.points) + cross(spec, s.xi_prime, st.points));
    st.running_m = (tt * st.running_m + fresh) / (tt + 1.0);
    st.iter = t + 1;

    if (st.iter % cfg.trace_stride == 0) {
      out.trace.push_back({st.iter, st.running_mmd_sq, st.points});
    }
    if (should_stop(cfg, st.iter, st.running_mmd_sq, checkpoint)) {
      out.status = SgdStatus::Stalled;
      break;
    }
  }
  if (out.trace.back().t != st.iter) {
    out.trace.push_back({st.iter, st.running_mmd_sq, st.points});
  }

  out.running_mmd_sq = st.running_mmd_sq;
  out.mmd_estimate = std::sqrt(std::max(st.running_mmd_sq, 0.0));
  const EmbeddingModel model(target, spec);
  out.final_m = model.embedding(st.points);
  out.quantization.points = st.points;
  out.quantization.kind = WeightKind::SumToOne;
  try {
    const KernelSystem sys(spec, st.points);
    out.quantization = sum_to_one_weights(sys, out.final_m);
  } catch (const Error& e) {
    // last state is kept; weights stay empty
    out.status = SgdStatus::Aborted;
    if (out.message.empty()) out.message = e.what();
  }
  return out;
}

PenalizedResult sgd_quantize_penalized(const KernelSpec& spec, const TargetDistribution& target,
                                       const SgdConfig& cfg, const Eigen::VectorXd& init_points,
                                       const Eigen::VectorXd& init_mu) {
  check_init(cfg, spec, init_points);
  if (init_mu.size() != init_points.size() || !init_mu.allFinite()) {
    throw std::invalid_argument("initial weights must be finite with one entry per point");
  }
  PenalizedResult out;
  Eigen::VectorXd x = init_points;
  Eigen::VectorXd mu = init_mu;
  Rng rng(cfg.seed);
  out.trace.push_back({0, 0.0, x});

  for (long t = 0; t < cfg.max_iters; ++t) {
    const CostSample s = sample_pair(target, rng);
    const Eigen::VectorXd p = project_simplex(mu);
    const DoublePrimeGradient g = evaluate_cost_double_prime(spec, x, p, s);
    const Eigen::VectorXd gap = mu - p;
    const double penalty = gap.norm();
    out.max_penalty = std::max(out.max_penalty, penalty);

    const double tt = static_cast<double>(t);
    out.running_objective = (tt * out.running_objective + g.value + penalty) / (tt + 1.0);

    Eigen::VectorXd grad_mu = projection_jacobian_apply(p, g.grad_weights);
    if (penalty > 0.0) {
      grad_mu += gap / penalty;
    }
    const double eta = cfg.learning_rate(t);
    x -= eta * g.grad_points;
    mu -= eta * grad_mu;
    out.collisions += separate_points(x, spec.ell);
    if (!x.allFinite() || !mu.allFinite()) {
      throw Error("penalized descent produced non-finite iterates at iteration " +
                  std::to_string(t));
    }
    if ((t + 1) % cfg.trace_stride == 0) {
      out.trace.push_back({t + 1, out.running_objective, x});
    }
  }

  out.mu = mu;
  out.quantization = {x, project_simplex(mu), WeightKind::Simplex};
  return out;
}

}  // namespace mmdq
