#include "seqaug/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "seqaug/metrics.hpp"

namespace seqaug::plots {

namespace {

constexpr const char* kRealColour = "#1f77b4";
constexpr const char* kSynColour = "#ff7f0e";

std::string escape(const std::string& s) {
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

std::string header(int w, int h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      w, h);
}

std::string legend(double x, double y) {
  return fmt::format(
      "<rect x=\"{0:.1f}\" y=\"{1:.1f}\" width=\"10\" height=\"10\" fill=\"{2}\" fill-opacity=\"0.6\"/>"
      "<text x=\"{3:.1f}\" y=\"{4:.1f}\">real</text>\n"
      "<rect x=\"{0:.1f}\" y=\"{5:.1f}\" width=\"10\" height=\"10\" fill=\"{6}\" fill-opacity=\"0.6\"/>"
      "<text x=\"{3:.1f}\" y=\"{7:.1f}\">synthetic</text>\n",
      x, y, kRealColour, x + 14, y + 9, y + 14, kSynColour, y + 23);
}

// Blue (-1) through white (0) to red (+1).
std::string diverging(double v) {
  if (std::isnan(v)) return "#bbbbbb";
  v = std::clamp(v, -1.0, 1.0);
  auto channel = [](double a) { return static_cast<int>(std::lround(255.0 * a)); };
  if (v >= 0) return fmt::format("#ff{:02x}{:02x}", channel(1 - v), channel(1 - v));
  return fmt::format("#{:02x}{:02x}ff", channel(1 + v), channel(1 + v));
}

}  // namespace

std::string distribution_svg(const VariableSpec& spec, const std::vector<double>& real,
                             const std::vector<double>& syn, int bins) {
  const auto [hr, hs] = metrics::shared_histograms(real, syn, spec, bins, 1e-12);
  const int w = 420, h = 260, left = 40, right = 20, top = 30, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  const auto n = hr.probabilities.size();
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    peak = std::max({peak, hr.probabilities[i], hs.probabilities[i]});
  if (peak <= 0.0) peak = 1.0;
  const double bw = pw / static_cast<double>(n);

  std::string out = header(w, h);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n", left,
                     escape(spec.name + (spec.unit.empty() ? "" : " (" + spec.unit + ")")));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = left + bw * static_cast<double>(i);
    for (int s = 0; s < 2; ++s) {
      const double p = s == 0 ? hr.probabilities[i] : hs.probabilities[i];
      const double bh = ph * p / peak;
      out += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" "
          "fill-opacity=\"0.5\"/>\n",
          x, top + ph - bh, bw, bh, s == 0 ? kRealColour : kSynColour);
    }
  }
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left,
                     top + ph, left + pw);
  if (spec.is_discrete()) {
    for (std::size_t i = 0; i < n; ++i)
      out += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"9\">{}</text>\n",
          left + bw * (static_cast<double>(i) + 0.5), top + ph + 12, escape(spec.categories[i]));
  } else {
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left, top + ph + 14,
                       fmt::format("{:.4g}", hr.edges.front()));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left + pw,
                       top + ph + 14, fmt::format("{:.4g}", hr.edges.back()));
  }
  out += legend(w - 110, 8);
  out += "</svg>\n";
  return out;
}

std::string heatmap_svg(const std::string& title, const Eigen::MatrixXd& m,
                        const std::vector<std::string>& names) {
  const auto n = static_cast<int>(m.rows());
  const int cell = 22, left = 130, top = 40;
  const int w = left + cell * n + 20, h = top + cell * n + 120;
  std::string out = header(w, h);
  out += fmt::format("<text x=\"10\" y=\"20\" font-size=\"13\">{}</text>\n", escape(title));
  for (int i = 0; i < n; ++i) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 4,
                       top + cell * i + cell * 0.7, escape(names[static_cast<std::size_t>(i)]));
    const double lx = left + cell * i + cell * 0.5, ly = top + cell * n + 6;
    out += fmt::format(
        "<text x=\"{0:.1f}\" y=\"{1:.1f}\" transform=\"rotate(60 {0:.1f} {1:.1f})\">{2}</text>\n",
        lx, ly, escape(names[static_cast<std::size_t>(i)]));
    for (int j = 0; j < n; ++j)
      out += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"white\"/>\n",
          left + cell * j, top + cell * i, cell, cell, diverging(m(i, j)));
  }
  out += "</svg>\n";
  return out;
}

std::string scatter_svg(const std::string& title, const metrics::Projection& p) {
  const int w = 460, h = 400, margin = 40;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto* m : {&p.real, &p.syn})
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      xmin = std::min(xmin, (*m)(i, 0));
      xmax = std::max(xmax, (*m)(i, 0));
      ymin = std::min(ymin, (*m)(i, 1));
      ymax = std::max(ymax, (*m)(i, 1));
    }
  if (!(xmax > xmin)) xmin -= 1, xmax += 1;
  if (!(ymax > ymin)) ymin -= 1, ymax += 1;
  const double pw = w - 2 * margin, ph = h - 2 * margin;
  auto sx = [&](double x) { return margin + pw * (x - xmin) / (xmax - xmin); };
  auto sy = [&](double y) { return margin + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::string out = header(w, h);
  out += fmt::format("<text x=\"10\" y=\"20\" font-size=\"13\">{} ({})</text>\n", escape(title),
                     metrics::to_string(p.method));
  out += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
      margin, margin, pw, ph);
  for (int s = 0; s < 2; ++s) {
    const auto& m = s == 0 ? p.real : p.syn;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      out += fmt::format(
          "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
          sx(m(i, 0)), sy(m(i, 1)), s == 0 ? kRealColour : kSynColour);
  }
  out += legend(w - 100, 8);
  out += "</svg>\n";
  return out;
}

}  // namespace seqaug::plots
