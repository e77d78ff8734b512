#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mmdq/distributions.hpp"
#include "mmdq/kernel.hpp"
#include "mmdq/sgd.hpp"
#include "mmdq/weights.hpp"

namespace mmdq {

enum class Method { SgdAlg1, PenalizedJoint, ClosedFormDeterministic };

std::string_view to_string(Method method);
/// "sgd", "penalized" or "closed-form".
Method parse_method(std::string_view text);

/// One quantization run.
struct ExperimentConfig {
  TargetDistribution target = TargetDistribution::normal();
  KernelSpec kernel = KernelSpec::gaussian(0.5);
  int n_points = 5;
  Method method = Method::SgdAlg1;
  SgdConfig sgd;
  /// Final weights: SumToOne keeps the bordered-system weights, Simplex
  /// additionally enforces non-negativity by the active-set solver.
  WeightKind weights = WeightKind::Simplex;
  /// Files go here; empty means no files.
  std::filesystem::path output_dir;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct MmdReport {
  ExperimentConfig config;
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  WeightKind weight_kind = WeightKind::SumToOne;
  double mmd = 0.0;
  double mmd_sq = 0.0;
  EmbeddingSource mmd_source = EmbeddingSource::ClosedForm;
  /// Negative entries of the sum-to-one weights at the final points.
  int negative_weight_count = 0;
  double running_mmd_sq = 0.0;  // SGD methods only
  long iterations = 0;
  std::string status = "ok";    // ok, not_converged, aborted
  std::string message;
  double wall_time = 0.0;       // seconds
};

/// Runs the configured method and, when output_dir is set, writes
/// report.json, points.csv, trace.csv (SGD methods), density.svg and
/// embedding.svg. Throws std::invalid_argument for invalid configs; numerical
/// failures are reported through `status`.
MmdReport run_quantize(const ExperimentConfig& cfg);

struct SweepConfig {
  std::vector<TargetDistribution> targets{TargetDistribution::normal(), TargetDistribution::uniform(),
                                          TargetDistribution::exponential()};
  std::vector<double> ells{0.1, 0.5};
  std::vector<double> nus{0.5, 2.5, std::numeric_limits<double>::infinity()};
  std::vector<int> ns{5};
  Method method = Method::SgdAlg1;
  WeightKind weights = WeightKind::Simplex;
  SgdConfig sgd;  // n_points and seed are set per cell
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepRow {
  std::string target;
  double ell = 0.0;
  double nu = 0.0;
  int n = 0;
  Method method = Method::SgdAlg1;
  double mmd = 0.0;
  std::string status;
  int negative_weight_count = 0;
};

/// Runs one cell per (target, ell, nu, n) in a worker pool. Cell i uses seed
/// `seed ^ i`. Each cell's files go to output_dir/cell_XXX; the summary
/// sweep.csv is written once all cells finish. Rows come back in cell order.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

/// Seed for the i-th independent run of a sweep.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

// ---- file formats -------------------------------------------------------

/// Shortest text that round-trips: 17 significant digits, "inf"/"nan".
std::string format_double(double v);
double parse_double(std::string_view text);

struct PointsTable {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
};

/// Header `index,x,p`.
void write_points_csv(const std::filesystem::path& file, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& p);
PointsTable read_points_csv(const std::filesystem::path& file);

/// Header `t,running_mmd_sq,x_0,...,x_{n-1}`.
void write_trace_csv(const std::filesystem::path& file, const IterationTrace& trace);

/// Header `target,ell,nu,n,method,mmd,status`.
void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& file);

void write_report_json(const std::filesystem::path& file, const MmdReport& report);

/// Two plots: target density with the point masses as stems, and the
/// embeddings of the target and of the quantization.
void write_density_svg(const std::filesystem::path& file, const TargetDistribution& target,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& p);
void write_embedding_svg(const std::filesystem::path& file, const EmbeddingModel& model,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& p);

// ---- invariant suite (the `check` subcommand) --------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast self-checks of the library invariants on seeded random instances.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 12345);

}  // namespace mmdq
