#include "mmdq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <stdexcept>
#include <thread>

#include "mmdq/closedform.hpp"
#include "mmdq/error.hpp"
#include "mmdq/linalg.hpp"

namespace mmdq {
namespace {

namespace fs = std::filesystem;

struct MethodOutput {
  Eigen::VectorXd points;
  std::optional<Eigen::VectorXd> fixed_weights;  // penalized: pi(mu)
  std::optional<IterationTrace> trace;
  double running_mmd_sq = 0.0;
  long iterations = 0;
  std::string status = "ok";
  std::string message;
};

MethodOutput run_method(const ExperimentConfig& cfg) {
  MethodOutput out;
  SgdConfig sgd = cfg.sgd;
  sgd.n_points = cfg.n_points;
  switch (cfg.method) {
    case Method::SgdAlg1: {
      SgdResult r = sgd_quantize(cfg.kernel, cfg.target, sgd, quantile_init(cfg.target, cfg.n_points));
      out.points = r.quantization.points;
      out.trace = std::move(r.trace);
      out.running_mmd_sq = r.running_mmd_sq;
      out.iterations = r.state.iter;
      if (r.status == SgdStatus::Aborted) {
        out.status = "aborted";
        out.message = r.message;
      }
      break;
    }
    case Method::PenalizedJoint: {
      const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(cfg.n_points, 1.0 / cfg.n_points);
      PenalizedResult r = sgd_quantize_penalized(cfg.kernel, cfg.target, sgd,
                                                 quantile_init(cfg.target, cfg.n_points), mu0);
      out.points = r.quantization.points;
      out.fixed_weights = r.quantization.weights;
      out.trace = std::move(r.trace);
      out.running_mmd_sq = r.running_objective;
      out.iterations = sgd.max_iters;
      break;
    }
    case Method::ClosedFormDeterministic: {
      const auto& normal = std::get<NormalParams>(cfg.target.params());
      const NormalTargetSpec spec{normal.mean, normal.std, cfg.kernel.ell};
      const DeterministicResult r = deterministic_optimize(spec, cfg.n_points, WeightKind::SumToOne);
      out.points = r.quantization.points;
      out.iterations = r.iterations;
      if (!r.converged) {
        out.status = "not_converged";
        out.message = "gradient norm " + format_double(r.grad_norm);
      }
      break;
    }
  }
  return out;
}

void write_outputs(const MmdReport& report, const MethodOutput& method, const EmbeddingModel& model) {
  const fs::path& dir = report.config.output_dir;
  fs::create_directories(dir);
  if (method.trace) {
    write_trace_csv(dir / "trace.csv", *method.trace);
  }
  write_report_json(dir / "report.json", report);
  if (report.weights.size() == report.points.size()) {
    write_points_csv(dir / "points.csv", report.points, report.weights);
    write_density_svg(dir / "density.svg", report.config.target, report.points, report.weights);
    write_embedding_svg(dir / "embedding.svg", model, report.points, report.weights);
  }
}

std::string cell_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cell_%03zu", index);
  return buf;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::SgdAlg1:
      return "sgd";
    case Method::PenalizedJoint:
      return "penalized";
    case Method::ClosedFormDeterministic:
      return "closed-form";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "sgd") return Method::SgdAlg1;
  if (text == "penalized") return Method::PenalizedJoint;
  if (text == "closed-form") return Method::ClosedFormDeterministic;
  throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  kernel.validate();
  if (n_points < 1) {
    throw std::invalid_argument("n_points must be at least 1");
  }
  SgdConfig s = sgd;
  s.n_points = n_points;
  s.validate();
  if (method == Method::ClosedFormDeterministic && (!target.is_normal() || !kernel.is_gaussian())) {
    throw std::invalid_argument("the closed-form method needs a normal target and a Gaussian kernel");
  }
}

MmdReport run_quantize(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  MmdReport report;
  report.config = cfg;

  MethodOutput method = run_method(cfg);
  report.points = method.points;
  report.running_mmd_sq = method.running_mmd_sq;
  report.iterations = method.iterations;
  report.status = method.status;
  report.message = method.message;

  const EmbeddingModel model(cfg.target, cfg.kernel);
  report.mmd_source = model.source();
  try {
    const KernelSystem sys(cfg.kernel, method.points);
    const Eigen::VectorXd m = model.embedding(method.points);
    const Eigen::VectorXd sum_to_one = sum_to_one_weights(sys, m).weights;
    report.negative_weight_count = static_cast<int>((sum_to_one.array() < 0.0).count());
    if (method.fixed_weights) {
      report.weights = *method.fixed_weights;
      report.weight_kind = WeightKind::Simplex;
    } else if (cfg.weights == WeightKind::Simplex) {
      report.weights = simplex_weights(sys, m).quantization.weights;
      report.weight_kind = WeightKind::Simplex;
    } else if (cfg.weights == WeightKind::SumToOne) {
      report.weights = sum_to_one;
      report.weight_kind = WeightKind::SumToOne;
    } else {
      report.weights = signed_weights(sys, m).weights;
      report.weight_kind = WeightKind::Signed;
    }
    report.mmd_sq = mmd_sq(sys, m, model.self_energy(), report.weights);
    report.mmd = std::sqrt(std::max(report.mmd_sq, 0.0));
  } catch (const Error& e) {
    report.status = "aborted";
    report.message = e.what();
    report.weights.resize(0);
    report.mmd = report.mmd_sq = std::numeric_limits<double>::quiet_NaN();
  }

  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.output_dir.empty()) {
    write_outputs(report, method, model);
  }
  return report;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  struct Cell {
    const TargetDistribution* target;
    double ell;
    double nu;
    int n;
  };
  std::vector<Cell> cells;
  for (const auto& target : cfg.targets) {
    for (double ell : cfg.ells) {
      for (double nu : cfg.nus) {
        for (int n : cfg.ns) {
          cells.push_back({&target, ell, nu, n});
        }
      }
    }
  }

  std::vector<SweepRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& cell = cells[i];
    SweepRow& row = rows[i];
    row.target = cell.target->family_name();
    row.ell = cell.ell;
    row.nu = cell.nu;
    row.n = cell.n;
    row.method = cfg.method;
    row.mmd = std::numeric_limits<double>::quiet_NaN();
    try {
      ExperimentConfig ec;
      ec.target = *cell.target;
      ec.kernel = KernelSpec::matern(cell.nu, cell.ell);
      ec.n_points = cell.n;
      ec.method = cfg.method;
      ec.weights = cfg.weights;
      ec.sgd = cfg.sgd;
      ec.sgd.seed = derive_seed(cfg.seed, i);
      if (!cfg.output_dir.empty()) {
        ec.output_dir = cfg.output_dir / cell_dir_name(i);
      }
      if (cfg.method == Method::ClosedFormDeterministic &&
          (!ec.target.is_normal() || !ec.kernel.is_gaussian())) {
        row.status = "unsupported";
        return;
      }
      const MmdReport report = run_quantize(ec);
      row.mmd = report.mmd;
      row.status = report.status;
      row.negative_weight_count = report.negative_weight_count;
    } catch (const std::exception&) {
      row.status = "error";
    }
  };

  unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      run_cell(i);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    write_sweep_csv(cfg.output_dir / "sweep.csv", rows);
  }
  return rows;
}

}  // namespace mmdq
