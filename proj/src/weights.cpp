#include "mmdq/weights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mmdq/error.hpp"

namespace mmdq {
namespace {

constexpr double kNegativeWeightTol = 1e-12;
constexpr double kSumTol = 1e-10;
constexpr double kDualTol = 1e-10;

void require_rhs(const KernelSystem& sys, const Eigen::VectorXd& m) {
  if (m.size() != sys.size()) {
    throw std::invalid_argument("embedding vector length does not match the support points");
  }
}

// Bordered solve on a principal submatrix.
BorderedSolution bordered_subsystem(const Eigen::MatrixXd& k, const Eigen::VectorXd& m) {
  const SpdFactor factor(k);
  const Eigen::VectorXd u = factor.solve(m);
  const Eigen::VectorXd w = factor.solve(Eigen::VectorXd::Ones(m.size()));
  const double s = w.sum();
  BorderedSolution out;
  out.lambda_half = (u.sum() - 1.0) / s;
  out.p = u - out.lambda_half * w;
  const double defect = 1.0 - out.p.sum();
  out.p += (defect / s) * w;
  out.lambda_half -= defect / s;
  return out;
}

}  // namespace

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Signed:
      return "signed";
    case WeightKind::SumToOne:
      return "sum-to-one";
    case WeightKind::Simplex:
      return "simplex";
  }
  return "unknown";
}

WeightKind parse_weight_kind(std::string_view text) {
  if (text == "signed") return WeightKind::Signed;
  if (text == "sum-to-one") return WeightKind::SumToOne;
  if (text == "simplex") return WeightKind::Simplex;
  throw std::invalid_argument("unknown weight kind '" + std::string(text) + "'");
}

void Quantization::validate() const {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("points and weights differ in length");
  }
  require_distinct(points);
  if (!weights.allFinite()) {
    throw std::invalid_argument("weights must be finite");
  }
  if (kind == WeightKind::Signed) {
    return;
  }
  if (std::abs(weights.sum() - 1.0) > kSumTol) {
    throw std::invalid_argument("weights do not sum to one");
  }
  if (kind == WeightKind::Simplex && weights.minCoeff() < -kNegativeWeightTol) {
    throw std::invalid_argument("simplex weights must be non-negative");
  }
}

Quantization signed_weights(const KernelSystem& sys, const Eigen::VectorXd& m) {
  require_rhs(sys, m);
  return {sys.points(), sys.solve(m), WeightKind::Signed};
}

Quantization sum_to_one_weights(const KernelSystem& sys, const Eigen::VectorXd& m) {
  require_rhs(sys, m);
  return {sys.points(), sys.solve_bordered(m).p, WeightKind::SumToOne};
}

ActiveSetSolution simplex_weights(const KernelSystem& sys, const Eigen::VectorXd& m) {
  require_rhs(sys, m);
  const Eigen::Index n = sys.size();
  const BorderedSolution start = sys.solve_bordered(m);

  ActiveSetSolution out;
  out.quantization = {sys.points(), start.p, WeightKind::Simplex};
  out.lambda = 2.0 * start.lambda_half;
  if (start.p.minCoeff() >= -kNegativeWeightTol) {
    return out;
  }

  Eigen::MatrixXd k = sys.matrix();
  k.diagonal().array() += sys.jitter();
  const double dual_tol = kDualTol * std::max(1.0, k.diagonal().maxCoeff());

  Eigen::VectorXd p = project_simplex(start.p);
  std::vector<bool> fixed(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    fixed[static_cast<std::size_t>(i)] = p[i] == 0.0;
  }

  const int cap = static_cast<int>(10 * n);
  for (int iter = 1; iter <= cap; ++iter) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd kff(nf, nf);
    Eigen::VectorXd mf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      mf[a] = m[free_idx[a]];
      for (Eigen::Index b = 0; b < nf; ++b) kff(a, b) = k(free_idx[a], free_idx[b]);
    }
    const BorderedSolution sub = bordered_subsystem(kff, mf);

    // step towards the subspace minimizer, stopping at the first bound hit
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index i = free_idx[a];
      const double d = sub.p[a] - p[i];
      if (d < 0.0 && sub.p[a] < 0.0) {
        const double ratio = p[i] / -d;
        if (ratio < alpha) {
          alpha = ratio;
          blocking = i;
        }
      }
    }

    if (blocking < 0) {
      for (Eigen::Index a = 0; a < nf; ++a) p[free_idx[a]] = sub.p[a];
      const Eigen::VectorXd grad = k * p - m;  // half the objective gradient
      Eigen::Index release = -1;
      double worst = -dual_tol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!fixed[static_cast<std::size_t>(i)]) continue;
        const double mult = 2.0 * (grad[i] + sub.lambda_half);
        if (mult < worst) {
          worst = mult;
          release = i;
        }
      }
      if (release < 0) {
        out.quantization.weights = p;
        out.lambda = 2.0 * sub.lambda_half;
        out.iterations = iter;
        std::vector<double> mults;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!fixed[static_cast<std::size_t>(i)]) continue;
          out.active_set.push_back(i);
          mults.push_back(2.0 * (grad[i] + sub.lambda_half));
        }
        out.multipliers = Eigen::Map<const Eigen::VectorXd>(mults.data(),
                                                            static_cast<Eigen::Index>(mults.size()));
        return out;
      }
      fixed[static_cast<std::size_t>(release)] = false;
    } else {
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index i = free_idx[a];
        p[i] += alpha * (sub.p[a] - p[i]);
      }
      p[blocking] = 0.0;
      fixed[static_cast<std::size_t>(blocking)] = true;
      // keep the iterate exactly on the simplex
      p = p.cwiseMax(0.0);
      p /= p.sum();
    }
  }
  std::ostringstream os;
  os << "active-set iteration did not terminate within " << cap << " iterations";
  throw ActiveSetCycle(os.str(), p);
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) {
    throw std::invalid_argument("cannot project an empty vector");
  }
  if (!v.allFinite()) {
    throw std::domain_error("project_simplex requires finite entries");
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= 8.0 * static_cast<double>(n) * eps) {
    return v;
  }
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
      tau = candidate;
    }
  }
  return (v.array() - tau).cwiseMax(0.0).matrix();
}

double optimal_mmd_sq_signed(const KernelSystem& sys, const Eigen::VectorXd& m,
                             double self_energy) {
  require_rhs(sys, m);
  return self_energy - m.dot(sys.solve(m));
}

double optimal_mmd_sq_probability(const KernelSystem& sys, const Eigen::VectorXd& m,
                                  double self_energy) {
  require_rhs(sys, m);
  const Eigen::VectorXd u = sys.solve(m);
  const double excess = u.sum() - 1.0;
  return self_energy - m.dot(u) + excess * excess / sys.ones_inv_ones();
}

double mmd_sq(const KernelSystem& sys, const Eigen::VectorXd& m, double self_energy,
              const Eigen::VectorXd& weights) {
  require_rhs(sys, m);
  return self_energy + weight_objective(sys.matrix(), m, weights);
}

double weight_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& m,
                        const Eigen::VectorXd& p) {
  return p.dot(k * p) - 2.0 * p.dot(m);
}

}  // namespace mmdq
