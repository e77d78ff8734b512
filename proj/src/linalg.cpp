#include "mmdq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mmdq/error.hpp"

namespace mmdq {
namespace {

constexpr double kFirstJitter = 1e-12;
constexpr double kJitterCeiling = 1e-6;
// Pivots below this fraction of the largest diagonal entry are treated as a
// failed factorization.
constexpr double kPivotFloor = 1e-15;

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, double max_diag) {
  if (llt.info() != Eigen::Success) {
    return false;
  }
  const auto l = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double piv = l[i] * l[i];
    if (!std::isfinite(piv) || piv <= kPivotFloor * max_diag) {
      return false;
    }
  }
  return true;
}

}  // namespace

SpdFactor::SpdFactor(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw std::invalid_argument("SpdFactor needs a non-empty square matrix");
  }
  const double max_diag = a.diagonal().cwiseAbs().maxCoeff();
  double rel = 0.0;
  while (true) {
    const double jitter = rel * max_diag;
    if (jitter == 0.0) {
      llt_.compute(a);
    } else {
      llt_.compute(a + jitter * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    }
    if (factor_ok(llt_, max_diag)) {
      jitter_ = jitter;
      a_ = a;
      a_.diagonal().array() += jitter;
      break;
    }
    rel = rel == 0.0 ? kFirstJitter : rel * 10.0;
    if (rel > kJitterCeiling * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "kernel matrix of size " << a.rows()
         << " is not positive definite at jitter ceiling " << kJitterCeiling << " * max diag";
      throw IllConditioned(os.str());
    }
  }
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = llt_.solve(rhs);
  x += llt_.solve(rhs - a_ * x);
  return x;
}

void require_distinct(const Eigen::VectorXd& points) {
  if (points.size() == 0) {
    throw std::invalid_argument("at least one support point is required");
  }
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) {
      throw std::domain_error("support points must be finite");
    }
  }
  if (min_gap(points) <= 0.0) {
    throw DegeneratePoints("support points must be pairwise distinct");
  }
}

double min_gap(const Eigen::VectorXd& points) {
  std::vector<double> sorted(points.data(), points.data() + points.size());
  std::sort(sorted.begin(), sorted.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    gap = std::min(gap, sorted[i] - sorted[i - 1]);
  }
  return gap;
}

KernelSystem::KernelSystem(const KernelSpec& spec, Eigen::VectorXd points)
    : spec_(spec),
      points_((require_distinct(points), std::move(points))),
      matrix_(gram(spec_, points_)),
      factor_(matrix_) {
  inv_ones_ = factor_.solve(Eigen::VectorXd::Ones(size()));
  ones_inv_ones_ = inv_ones_.sum();
}

Eigen::VectorXd KernelSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) {
    throw std::invalid_argument("right-hand side length does not match the system");
  }
  return factor_.solve(rhs);
}

BorderedSolution KernelSystem::solve_bordered(const Eigen::VectorXd& m) const {
  const Eigen::VectorXd u = solve(m);
  BorderedSolution out;
  out.lambda_half = (u.sum() - 1.0) / ones_inv_ones_;
  out.p = u - out.lambda_half * inv_ones_;
  // Rounding leaves 1^T p off by a few ulps; correct along K^-1 1, the only
  // direction that moves the sum without disturbing K p + (lambda/2) 1 = m.
  const double defect = 1.0 - out.p.sum();
  out.p += (defect / ones_inv_ones_) * inv_ones_;
  out.lambda_half -= defect / ones_inv_ones_;
  return out;
}

KernelSystem build_system(const KernelSpec& spec, const Eigen::VectorXd& points) {
  return KernelSystem(spec, points);
}

}  // namespace mmdq
