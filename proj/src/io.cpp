#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mmdq/experiment.hpp"

namespace mmdq {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  return in;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void expect_header(std::istream& in, std::string_view header, const fs::path& file) {
  std::string line;
  std::getline(in, line);
  strip_cr(line);
  if (line != header) {
    throw std::runtime_error(file.string() + ": unexpected header '" + line + "'");
  }
}

nlohmann::json params_json(const TargetDistribution& target) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) {
          return {{"mean", p.mean}, {"std", p.std}};
        } else if constexpr (std::is_same_v<T, UniformParams>) {
          return {{"lo", p.lo}, {"hi", p.hi}};
        } else {
          return {{"rate", p.rate}};
        }
      },
      target.params());
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// json has no inf/nan
nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view text) {
  const std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

void write_points_csv(const fs::path& file, const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  if (x.size() != p.size()) throw std::invalid_argument("points and weights differ in length");
  auto out = open_out(file);
  out << "index,x,p\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out << i << ',' << format_double(x[i]) << ',' << format_double(p[i]) << '\n';
  }
}

PointsTable read_points_csv(const fs::path& file) {
  auto in = open_in(file);
  expect_header(in, "index,x,p", file);
  std::vector<double> xs, ps;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 3 || std::stoul(cells[0]) != xs.size()) {
      throw std::runtime_error(file.string() + ": malformed row '" + line + "'");
    }
    xs.push_back(parse_double(cells[1]));
    ps.push_back(parse_double(cells[2]));
  }
  PointsTable t;
  t.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  t.p = Eigen::Map<Eigen::VectorXd>(ps.data(), static_cast<Eigen::Index>(ps.size()));
  return t;
}

void write_trace_csv(const fs::path& file, const IterationTrace& trace) {
  auto out = open_out(file);
  const Eigen::Index n = trace.empty() ? 0 : trace.front().points.size();
  out << "t,running_mmd_sq";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  out << '\n';
  for (const auto& row : trace) {
    out << row.t << ',' << format_double(row.running_mmd_sq);
    for (Eigen::Index i = 0; i < row.points.size(); ++i) out << ',' << format_double(row.points[i]);
    out << '\n';
  }
}

void write_sweep_csv(const fs::path& file, const std::vector<SweepRow>& rows) {
  auto out = open_out(file);
  out << "target,ell,nu,n,method,mmd,status\n";
  for (const auto& r : rows) {
    out << r.target << ',' << format_double(r.ell) << ',' << format_double(r.nu) << ',' << r.n << ','
        << to_string(r.method) << ',' << format_double(r.mmd) << ',' << r.status << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(const fs::path& file) {
  auto in = open_in(file);
  expect_header(in, "target,ell,nu,n,method,mmd,status", file);
  std::vector<SweepRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto c = split_row(line);
    if (c.size() != 7) throw std::runtime_error(file.string() + ": malformed row '" + line + "'");
    SweepRow r;
    r.target = c[0];
    r.ell = parse_double(c[1]);
    r.nu = parse_double(c[2]);
    r.n = std::stoi(c[3]);
    r.method = parse_method(c[4]);
    r.mmd = parse_double(c[5]);
    r.status = c[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report_json(const fs::path& file, const MmdReport& report) {
  const auto& cfg = report.config;
  nlohmann::json j;
  j["config"] = {
      {"target", {{"family", cfg.target.family_name()}, {"params", params_json(cfg.target)}}},
      {"kernel", {{"family", cfg.kernel.is_gaussian() ? "gaussian" : "matern"},
                  {"ell", cfg.kernel.ell},
                  {"nu", number_or_string(cfg.kernel.is_gaussian() ? INFINITY : cfg.kernel.nu)}}},
      {"n_points", cfg.n_points},
      {"method", std::string(to_string(cfg.method))},
      {"weights", std::string(to_string(cfg.weights))},
      {"sgd",
       {{"max_iters", cfg.sgd.max_iters},
        {"lr_offset", cfg.sgd.lr_offset},
        {"lr_scale", cfg.sgd.lr_scale},
        {"seed", cfg.sgd.seed},
        {"cost_variant", cfg.sgd.cost_variant == CostVariant::Symmetric ? "symmetric" : "asymmetric"},
        {"stop_window", cfg.sgd.stop_window},
        {"stop_rel_tol", cfg.sgd.stop_rel_tol},
        {"trace_stride", cfg.sgd.trace_stride}}},
  };
  j["points"] = vector_json(report.points);
  j["weights"] = vector_json(report.weights);
  j["weight_kind"] = std::string(to_string(report.weight_kind));
  j["mmd"] = number_or_string(report.mmd);
  j["mmd_sq"] = number_or_string(report.mmd_sq);
  j["mmd_source"] = to_string(report.mmd_source);
  j["negative_weight_count"] = report.negative_weight_count;
  j["running_mmd_sq"] = number_or_string(report.running_mmd_sq);
  j["iterations"] = report.iterations;
  j["status"] = report.status;
  j["message"] = report.message;
  j["wall_time"] = report.wall_time;
  auto out = open_out(file);
  // nlohmann prints doubles with max_digits10, so they round-trip
  out << j.dump(2) << '\n';
}

}  // namespace mmdq
