#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdq/experiment.hpp"

namespace mmdq {
namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 48.0;
constexpr int kSamples = 400;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

// Plot range: central mass of the target plus all support points.
std::pair<double, double> x_range(const TargetDistribution& target, const Eigen::VectorXd& x) {
  double lo = target.quantile(0.001);
  double hi = target.quantile(0.999);
  if (x.size() > 0) {
    lo = std::min(lo, x.minCoeff());
    hi = std::max(hi, x.maxCoeff());
  }
  const double pad = 0.08 * (hi - lo);
  return {lo - pad, hi + pad};
}

class Plot {
 public:
  Plot(Frame f, std::string title) : f_(f) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
         << " font-size=\"14\">" << escape(title) << "</text>\n";
    axes();
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, std::string_view color,
                std::string_view dash = "") {
    out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << '"';
    out_ << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out_ << (i ? " " : "") << num(f_.px(xs[i])) << ',' << num(f_.py(ys[i]));
    }
    out_ << "\"/>\n";
  }

  void stem(double x, double y, std::string_view color) {
    out_ << "<line x1=\"" << num(f_.px(x)) << "\" y1=\"" << num(f_.py(0.0)) << "\" x2=\"" << num(f_.px(x))
         << "\" y2=\"" << num(f_.py(y)) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
         << "<circle cx=\"" << num(f_.px(x)) << "\" cy=\"" << num(f_.py(y)) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
  }

  void legend(int row, std::string_view color, std::string_view text) {
    const double y = kMargin + 4 + 16 * row;
    out_ << "<line x1=\"" << num(kWidth - 190) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kWidth - 170)
         << "\" y2=\"" << num(y) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
         << "<text x=\"" << num(kWidth - 164) << "\" y=\"" << num(y + 4)
         << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(text) << "</text>\n";
  }

  void save(const fs::path& file) {
    out_ << "</svg>\n";
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << out_.str();
  }

 private:
  void axes() {
    const double bottom = kHeight - kMargin;
    out_ << "<g stroke=\"black\" stroke-width=\"1\">\n"
         << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(kWidth - kMargin)
         << "\" y2=\"" << num(bottom) << "\"/>\n"
         << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(kMargin)
         << "\" y2=\"" << num(bottom) << "\"/>\n</g>\n";
    out_ << "<g font-family=\"sans-serif\" font-size=\"10\">\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = f_.x0 + (f_.x1 - f_.x0) * k / 4.0;
      const double yv = f_.y0 + (f_.y1 - f_.y0) * k / 4.0;
      char lx[32], ly[32];
      std::snprintf(lx, sizeof(lx), "%.3g", xv);
      std::snprintf(ly, sizeof(ly), "%.3g", yv);
      out_ << "<text x=\"" << num(f_.px(xv)) << "\" y=\"" << num(bottom + 16) << "\" text-anchor=\"middle\">"
           << lx << "</text>\n"
           << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(f_.py(yv) + 3) << "\" text-anchor=\"end\">"
           << ly << "</text>\n";
    }
    out_ << "</g>\n";
  }

  Frame f_;
  std::ostringstream out_;
};

std::vector<double> grid(double lo, double hi) {
  std::vector<double> g(kSamples);
  for (int i = 0; i < kSamples; ++i) g[i] = lo + (hi - lo) * i / (kSamples - 1);
  return g;
}

double finite_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double y : v) {
    if (std::isfinite(y)) m = std::max(m, y);
  }
  return m;
}

}  // namespace

void write_density_svg(const fs::path& file, const TargetDistribution& target, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& p) {
  const auto [lo, hi] = x_range(target, x);
  const auto xs = grid(lo, hi);
  std::vector<double> dens(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dens[i] = target.pdf(xs[i]);

  double ymax = finite_max(dens);
  double ymin = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    ymax = std::max(ymax, p[i]);
    ymin = std::min(ymin, p[i]);
  }
  Plot plot({lo, hi, ymin, 1.1 * ymax}, "density of " + target.label() + " and point masses");
  plot.polyline(xs, dens, "#1f77b4");
  for (Eigen::Index i = 0; i < x.size(); ++i) plot.stem(x[i], p[i], "#d62728");
  plot.legend(0, "#1f77b4", "density");
  plot.legend(1, "#d62728", "weights");
  plot.save(file);
}

void write_embedding_svg(const fs::path& file, const EmbeddingModel& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& p) {
  const auto [lo, hi] = x_range(model.target(), x);
  const auto xs = grid(lo, hi);
  std::vector<double> target_emb(xs.size()), quant_emb(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    target_emb[i] = model.embedding(xs[i]);
    quant_emb[i] = p.dot(cross(model.spec(), xs[i], x));
  }
  double ymin = 0.0;
  for (double y : quant_emb) ymin = std::min(ymin, y);
  const double ymax = std::max(finite_max(target_emb), finite_max(quant_emb));
  Plot plot({lo, hi, ymin, 1.1 * ymax}, "embeddings under " + model.spec().label());
  plot.polyline(xs, target_emb, "#1f77b4");
  plot.polyline(xs, quant_emb, "#d62728", "6,3");
  plot.legend(0, "#1f77b4", "target");
  plot.legend(1, "#d62728", "quantization");
  plot.save(file);
}

}  // namespace mmdq
