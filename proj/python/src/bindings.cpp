#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mmdq/closedform.hpp"
#include "mmdq/distributions.hpp"
#include "mmdq/error.hpp"
#include "mmdq/experiment.hpp"
#include "mmdq/kernel.hpp"
#include "mmdq/linalg.hpp"
#include "mmdq/weights.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

mmdq::TargetDistribution make_target(const std::string& family, double mean, double std, double lo, double hi,
                                     double rate) {
  if (family == "normal") return mmdq::TargetDistribution::normal(mean, std);
  if (family == "uniform") return mmdq::TargetDistribution::uniform(lo, hi);
  if (family == "exponential") return mmdq::TargetDistribution::exponential(rate);
  throw std::invalid_argument("unknown target '" + family + "'");
}

py::dict quantize(const std::string& target, double mean, double std, double lo, double hi, double rate, int n,
                  double ell, double nu, const std::string& method, const std::string& weights, std::uint64_t seed,
                  long iters, double lr_offset, double lr_scale, double stop_tol,
                  const std::optional<std::filesystem::path>& output_dir) {
  mmdq::ExperimentConfig cfg;
  cfg.target = make_target(target, mean, std, lo, hi, rate);
  cfg.kernel = mmdq::KernelSpec::matern(nu, ell);
  cfg.n_points = n;
  cfg.method = mmdq::parse_method(method);
  cfg.weights = mmdq::parse_weight_kind(weights);
  cfg.sgd.seed = seed;
  cfg.sgd.max_iters = iters;
  cfg.sgd.lr_offset = lr_offset;
  cfg.sgd.lr_scale = lr_scale;
  cfg.sgd.stop_rel_tol = stop_tol;
  if (output_dir) cfg.output_dir = *output_dir;
  cfg.validate();

  mmdq::MmdReport r;
  {
    py::gil_scoped_release release;
    r = mmdq::run_quantize(cfg);
  }
  return py::dict("points"_a = r.points, "weights"_a = r.weights,
                  "weight_kind"_a = std::string(mmdq::to_string(r.weight_kind)), "mmd"_a = r.mmd,
                  "mmd_sq"_a = r.mmd_sq, "mmd_source"_a = std::string(mmdq::to_string(r.mmd_source)),
                  "negative_weight_count"_a = r.negative_weight_count, "iterations"_a = r.iterations,
                  "status"_a = r.status, "message"_a = r.message);
}

}  // namespace

PYBIND11_MODULE(_mmdq, m) {
  m.doc() = "MMD-optimal quantization of one-dimensional distributions";
  py::register_exception<mmdq::Error>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<mmdq::KernelSpec>(m, "KernelSpec")
      .def_static("gaussian", &mmdq::KernelSpec::gaussian, "ell"_a)
      .def_static("matern", &mmdq::KernelSpec::matern, "nu"_a, "ell"_a)
      .def_readonly("ell", &mmdq::KernelSpec::ell)
      .def_readonly("nu", &mmdq::KernelSpec::nu)
      .def_property_readonly("is_gaussian", &mmdq::KernelSpec::is_gaussian)
      .def("__repr__", &mmdq::KernelSpec::label);

  py::class_<mmdq::TargetDistribution>(m, "TargetDistribution")
      .def_static("normal", &mmdq::TargetDistribution::normal, "mean"_a = 0.0, "std"_a = 1.0)
      .def_static("uniform", &mmdq::TargetDistribution::uniform, "lo"_a = 0.0, "hi"_a = 1.0)
      .def_static("exponential", &mmdq::TargetDistribution::exponential, "rate"_a = 1.0)
      .def("pdf", &mmdq::TargetDistribution::pdf, "x"_a)
      .def("cdf", &mmdq::TargetDistribution::cdf, "x"_a)
      .def("quantile", &mmdq::TargetDistribution::quantile, "u"_a)
      .def_property_readonly("family", &mmdq::TargetDistribution::family_name)
      .def("__repr__", &mmdq::TargetDistribution::label);

  py::class_<mmdq::EmbeddingModel>(m, "EmbeddingModel")
      .def(py::init<mmdq::TargetDistribution, mmdq::KernelSpec>(), "target"_a, "kernel"_a)
      .def("embedding", py::overload_cast<const Eigen::VectorXd&>(&mmdq::EmbeddingModel::embedding, py::const_),
           "points"_a)
      .def_property_readonly("self_energy", &mmdq::EmbeddingModel::self_energy)
      .def_property_readonly("source", [](const mmdq::EmbeddingModel& e) { return mmdq::to_string(e.source()); });

  m.def("kernel", &mmdq::eval, "kernel"_a, "x"_a, "y"_a, "Kernel value k(x, y).");
  m.def("gram", &mmdq::gram, "kernel"_a, "points"_a, "Kernel matrix of the points.");
  m.def(
      "sum_to_one_weights",
      [](const mmdq::KernelSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& emb) {
        return mmdq::sum_to_one_weights(mmdq::KernelSystem(s, x), emb).weights;
      },
      "kernel"_a, "points"_a, "m"_a, "Optimal weights subject to summing to one.");
  m.def(
      "simplex_weights",
      [](const mmdq::KernelSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& emb) {
        return mmdq::simplex_weights(mmdq::KernelSystem(s, x), emb).quantization.weights;
      },
      "kernel"_a, "points"_a, "m"_a, "Optimal non-negative weights summing to one.");
  m.def("project_simplex", &mmdq::project_simplex, "v"_a, "Euclidean projection onto the probability simplex.");
  m.def(
      "mmd_sq",
      [](const mmdq::KernelSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& emb, double self_energy,
         const Eigen::VectorXd& w) { return mmdq::mmd_sq(mmdq::KernelSystem(s, x), emb, self_energy, w); },
      "kernel"_a, "points"_a, "m"_a, "self_energy"_a, "weights"_a);

  m.def(
      "closed_mmd_sq",
      [](const Eigen::VectorXd& x, double mean, double std, double ell, const std::string& weights) {
        return mmdq::closed_mmd_sq({mean, std, ell}, x, mmdq::parse_weight_kind(weights));
      },
      "points"_a, "mean"_a = 0.0, "std"_a = 1.0, "ell"_a = 0.5, "weights"_a = "sum-to-one",
      "Squared MMD to a normal target under the Gaussian kernel, in closed form.");
  m.def(
      "deterministic_optimize",
      [](int n, double mean, double std, double ell) {
        const auto r = mmdq::deterministic_optimize({mean, std, ell}, n, mmdq::WeightKind::SumToOne);
        return py::dict("points"_a = r.quantization.points, "weights"_a = r.quantization.weights,
                        "mmd"_a = r.mmd, "iterations"_a = r.iterations, "converged"_a = r.converged);
      },
      "n"_a, "mean"_a = 0.0, "std"_a = 1.0, "ell"_a = 0.5);

  m.def("quantize", &quantize, py::kw_only(), "target"_a = "normal", "mean"_a = 0.0, "std"_a = 1.0, "lo"_a = 0.0,
        "hi"_a = 1.0, "rate"_a = 1.0, "n"_a = 5, "ell"_a = 0.5, "nu"_a = kInf, "method"_a = "sgd",
        "weights"_a = "simplex", "seed"_a = 0, "iters"_a = 100000, "lr_offset"_a = 100.0, "lr_scale"_a = 1.0,
        "stop_tol"_a = 1e-4, "output_dir"_a = py::none(),
        "Run one quantization and return its points, weights and MMD. Files are written only when output_dir "
        "is given.");

  m.def(
      "check",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : mmdq::run_invariant_suite(seed)) out.append(py::make_tuple(r.name, r.passed, r.detail));
        return out;
      },
      "seed"_a = 12345, "Run the invariant self-checks; returns (name, passed, detail) tuples.");
}
