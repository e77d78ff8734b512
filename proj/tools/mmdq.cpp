// mmdq: quantize one-dimensional distributions by MMD-optimal weighted points.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmdq/error.hpp"
#include "mmdq/experiment.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr const char* kOutputEnv = "MMDQ_OUTPUT_DIR";

// Plain key=value config files: bare keys belong to the chosen subcommand.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  std::string subcommand;

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty() && !subcommand.empty()) item.parents = {subcommand};
    }
    return items;
  }
};

struct TargetOptions {
  std::string family = "normal";
  double mean = 0.0;
  double std = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double rate = 1.0;

  void add(CLI::App* app) {
    app->add_option("--target", family, "normal, uniform or exponential")
        ->check(CLI::IsMember({"normal", "uniform", "exponential"}));
    app->add_option("--mean", mean, "normal mean");
    app->add_option("--std", std, "normal standard deviation");
    app->add_option("--lo", lo, "uniform lower bound");
    app->add_option("--hi", hi, "uniform upper bound");
    app->add_option("--rate", rate, "exponential rate");
  }

  mmdq::TargetDistribution build(const std::string& name) const {
    if (name == "normal") return mmdq::TargetDistribution::normal(mean, std);
    if (name == "uniform") return mmdq::TargetDistribution::uniform(lo, hi);
    if (name == "exponential") return mmdq::TargetDistribution::exponential(rate);
    throw std::invalid_argument("unknown target '" + name + "'");
  }
};

struct SgdOptions {
  long iters = 100'000;
  double lr_offset = 100.0;
  double lr_scale = 1.0;
  std::string cost = "symmetric";
  double stop_tol = 1e-4;
  long stop_window = 1000;
  long trace_stride = 100;
  std::string method = "sgd";
  std::string weights = "simplex";
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--method", method, "sgd, penalized or closed-form")
        ->check(CLI::IsMember({"sgd", "penalized", "closed-form"}));
    app->add_option("--weights", weights, "final weights: simplex, sum-to-one or signed")
        ->check(CLI::IsMember({"simplex", "sum-to-one", "signed"}));
    app->add_option("--seed", seed, "random seed");
    app->add_option("--iters", iters, "stochastic gradient iterations")->check(CLI::NonNegativeNumber);
    app->add_option("--lr-offset", lr_offset, "learning rate is lr-scale / (lr-offset + t)")
        ->check(CLI::PositiveNumber);
    app->add_option("--lr-scale", lr_scale)->check(CLI::PositiveNumber);
    app->add_option("--cost", cost, "symmetric or asymmetric sampled cost")
        ->check(CLI::IsMember({"symmetric", "asymmetric"}));
    app->add_option("--stop-tol", stop_tol, "relative change of the running MMD^2 that stops early; 0 disables")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--stop-window", stop_window)->check(CLI::PositiveNumber);
    app->add_option("--trace-stride", trace_stride)->check(CLI::PositiveNumber);
  }

  mmdq::SgdConfig build() const {
    mmdq::SgdConfig cfg;
    cfg.max_iters = iters;
    cfg.lr_offset = lr_offset;
    cfg.lr_scale = lr_scale;
    cfg.cost_variant = cost == "symmetric" ? mmdq::CostVariant::Symmetric : mmdq::CostVariant::Asymmetric;
    cfg.stop_rel_tol = stop_tol;
    cfg.stop_window = stop_window;
    cfg.trace_stride = trace_stride;
    cfg.seed = seed;
    return cfg;
  }
};

std::filesystem::path default_output_dir() {
  const char* env = std::getenv(kOutputEnv);
  return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::path("out");
}

void print_vector(const char* name, const Eigen::VectorXd& v) {
  std::cout << name << ':';
  for (Eigen::Index i = 0; i < v.size(); ++i) std::cout << ' ' << mmdq::format_double(v[i]);
  std::cout << '\n';
}

int run_quantize(const TargetOptions& target, const SgdOptions& sgd, int n, double ell,
                 const std::string& nu, const std::string& out_dir) {
  mmdq::ExperimentConfig cfg;
  cfg.target = target.build(target.family);
  cfg.kernel = mmdq::KernelSpec::matern(mmdq::parse_double(nu), ell);
  cfg.n_points = n;
  cfg.method = mmdq::parse_method(sgd.method);
  cfg.weights = mmdq::parse_weight_kind(sgd.weights);
  cfg.sgd = sgd.build();
  cfg.output_dir = out_dir.empty() ? default_output_dir() : std::filesystem::path(out_dir);
  cfg.validate();

  const mmdq::MmdReport r = mmdq::run_quantize(cfg);
  std::cout << "target: " << cfg.target.label() << '\n'
            << "kernel: " << cfg.kernel.label() << '\n'
            << "method: " << mmdq::to_string(cfg.method) << '\n'
            << "status: " << r.status << (r.message.empty() ? "" : " (" + r.message + ")") << '\n';
  print_vector("points", r.points);
  print_vector("weights", r.weights);
  std::cout << "mmd: " << mmdq::format_double(r.mmd) << " (" << mmdq::to_string(r.mmd_source) << ")\n"
            << "negative sum-to-one weights: " << r.negative_weight_count << '\n'
            << "output: " << cfg.output_dir.string() << '\n';
  return r.status == "aborted" ? kExitNumeric : 0;
}

int run_sweep(const TargetOptions& target, const SgdOptions& sgd, const std::vector<std::string>& targets,
              const std::vector<double>& ells, const std::vector<std::string>& nus, const std::vector<int>& ns,
              unsigned threads, const std::string& out_dir) {
  mmdq::SweepConfig cfg;
  cfg.targets.clear();
  for (const auto& name : targets) cfg.targets.push_back(target.build(name));
  cfg.ells = ells;
  cfg.nus.clear();
  for (const auto& nu : nus) cfg.nus.push_back(mmdq::parse_double(nu));
  cfg.ns = ns;
  cfg.method = mmdq::parse_method(sgd.method);
  cfg.weights = mmdq::parse_weight_kind(sgd.weights);
  cfg.sgd = sgd.build();
  cfg.seed = sgd.seed;
  cfg.threads = threads;
  cfg.output_dir = out_dir.empty() ? default_output_dir() : std::filesystem::path(out_dir);
  for (double ell : cfg.ells) mmdq::KernelSpec::matern(1.0, ell).validate();
  for (double nu : cfg.nus) mmdq::KernelSpec::matern(nu, 1.0).validate();

  const auto rows = mmdq::run_sweep(cfg);
  int failed = 0;
  for (const auto& row : rows) {
    std::cout << row.target << " ell=" << mmdq::format_double(row.ell) << " nu=" << mmdq::format_double(row.nu)
              << " n=" << row.n << " mmd=" << mmdq::format_double(row.mmd) << ' ' << row.status << '\n';
    failed += row.status == "aborted" || row.status == "error";
  }
  std::cout << rows.size() << " cells, " << failed << " failed; summary in "
            << (cfg.output_dir / "sweep.csv").string() << '\n';
  return 0;
}

int run_check(std::uint64_t seed) {
  int failed = 0;
  for (const auto& r : mmdq::run_invariant_suite(seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    failed += !r.passed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MMD quantization of one-dimensional distributions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  auto config = std::make_shared<SubcommandConfig>();
  app.config_formatter(config);
  app.allow_config_extras(CLI::config_extras_mode::error);

  TargetOptions target;
  SgdOptions sgd;
  std::string out_dir;

  auto* quantize = app.add_subcommand("quantize", "quantize one target");
  int n = 5;
  double ell = 0.5;
  std::string nu = "inf";
  target.add(quantize);
  sgd.add(quantize);
  quantize->add_option("-n,--n-points", n, "number of support points")->check(CLI::PositiveNumber);
  quantize->add_option("--ell", ell, "kernel bandwidth")->check(CLI::PositiveNumber);
  quantize->add_option("--nu", nu, "Matern smoothness; inf is the Gaussian kernel");
  quantize->add_option("-o,--out", out_dir, std::string("output directory (default $") + kOutputEnv + " or ./out)");

  auto* sweep = app.add_subcommand("sweep", "grid of targets, bandwidths, smoothness and sizes");
  std::vector<std::string> targets{"normal", "uniform", "exponential"};
  std::vector<double> ells{0.1, 0.5};
  std::vector<std::string> nus{"0.5", "2.5", "inf"};
  std::vector<int> ns{5};
  unsigned threads = 0;
  TargetOptions sweep_target;
  SgdOptions sweep_sgd;
  sweep_target.add(sweep);
  sweep->remove_option(sweep->get_option("--target"));
  sweep_sgd.add(sweep);
  sweep->add_option("--targets", targets)->delimiter(',')->check(CLI::IsMember({"normal", "uniform", "exponential"}));
  sweep->add_option("--ells", ells)->delimiter(',')->check(CLI::PositiveNumber);
  sweep->add_option("--nus", nus)->delimiter(',');
  sweep->add_option("--ns", ns)->delimiter(',')->check(CLI::PositiveNumber);
  sweep->add_option("--threads", threads, "worker threads; 0 uses all cores");
  sweep->add_option("-o,--out", out_dir, std::string("output directory (default $") + kOutputEnv + " or ./out)");

  auto* check = app.add_subcommand("check", "run the invariant self-checks");
  std::uint64_t check_seed = 12345;
  check->add_option("--seed", check_seed);

  for (auto* sub : {quantize, sweep, check}) {
    sub->fallthrough();
    sub->allow_config_extras(CLI::config_extras_mode::error);
  }
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "quantize" || arg == "sweep" || arg == "check") {
      config->subcommand = arg;
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*quantize) return run_quantize(target, sgd, n, ell, nu, out_dir);
    if (*sweep) return run_sweep(sweep_target, sweep_sgd, targets, ells, nus, ns, threads, out_dir);
    return run_check(check_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mmdq::Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
