#include "rmfp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "rmfp/errors.hpp"

namespace rmfp {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(),
                              ec.message()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

namespace {

template <class Field>
std::string field_csv(const std::vector<double>& ts, const std::vector<double>& xs,
                      const Field& f) {
  std::string s = "t\\x";
  for (double x : xs) s += fmt::format(",{:.17g}", x);
  s += '\n';
  for (std::size_t i = 0; i < ts.size(); ++i) {
    s += fmt::format("{:.17g}", ts[i]);
    for (std::size_t k = 0; k < xs.size(); ++k) s += fmt::format(",{:.17g}", f(i, k));
    s += '\n';
  }
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Dark blue to yellow.
std::string ramp(double s) {
  s = std::clamp(std::isfinite(s) ? s : 0.0, 0.0, 1.0);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * s)); };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(0x1f, 0xfd), mix(0x2a, 0xe7), mix(0x6e, 0x25));
}

std::pair<double, double> finite_range(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (hi == lo) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

}  // namespace

void write_node_csv(const std::filesystem::path& path, const GridSpec& grid, const NodeField& f) {
  std::vector<double> ts(grid.Nt + 1), xs(grid.Nx + 1);
  for (std::size_t i = 0; i <= grid.Nt; ++i) ts[i] = grid.t(i);
  for (std::size_t k = 0; k <= grid.Nx; ++k) xs[k] = grid.x(k);
  write_text(path, field_csv(ts, xs, f));
}

void write_cell_csv(const std::filesystem::path& path, const GridSpec& grid, const CellField& f) {
  std::vector<double> ts(grid.Nt), xs(grid.Nx);
  for (std::size_t i = 0; i < grid.Nt; ++i) ts[i] = grid.t_mid(i);
  for (std::size_t k = 0; k < grid.Nx; ++k) xs[k] = grid.x_mid(k);
  write_text(path, field_csv(ts, xs, f));
}

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<double>& ts, const std::vector<double>& xs,
                       const std::vector<double>& values) {
  const std::size_t rows = ts.size();
  const std::size_t cols = xs.size();
  if (rows == 0 || cols == 0 || values.size() != rows * cols) {
    throw IoError(fmt::format("heatmap '{}' has inconsistent dimensions", path.string()));
  }
  const double side = 512.0;
  const double cw = side / static_cast<double>(std::max(rows, cols));
  const double w = cw * static_cast<double>(cols);
  const double h = cw * static_cast<double>(rows);
  const double left = 60.0, top = 40.0, bar = 20.0;
  const auto [lo, hi] = finite_range(values);

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      left + w + 110.0, top + h + 50.0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
                   left + w / 2.0, escape(title));
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = top + h - cw * static_cast<double>(i + 1);
    for (std::size_t k = 0; k < cols; ++k) {
      const double v = values[i * cols + k];
      s += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
          left + cw * static_cast<double>(k), y, cw + 0.05, cw + 0.05, ramp((v - lo) / (hi - lo)));
    }
  }
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
                   "fill=\"none\" stroke=\"black\"/>\n",
                   left, top, w, h);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">x</text>\n",
                   left + w / 2.0, top + h + 35.0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", left,
                   top + h + 16.0, xs.front());
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                   left + w, top + h + 16.0, xs.back());
  s += fmt::format("<text x=\"20\" y=\"{:.1f}\" text-anchor=\"middle\">t</text>\n", top + h / 2.0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   left - 4.0, top + h, ts.front());
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   left - 4.0, top + 10.0, ts.back());
  const int steps = 32;
  const double bx = left + w + 20.0;
  for (int n = 0; n < steps; ++n) {
    const double frac = (n + 0.5) / steps;
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.2f}\" width=\"{:.1f}\" height=\"{:.2f}\" "
                     "fill=\"{}\"/>\n",
                     bx, top + h * (1.0 - static_cast<double>(n + 1) / steps), bar,
                     h / steps + 0.05, ramp(frac));
  }
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{:.4g}</text>\n", bx + bar + 4.0, top + 10.0, hi);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{:.4g}</text>\n", bx + bar + 4.0, top + h, lo);
  s += "</svg>\n";
  write_text(path, s);
}

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel,
                         const std::vector<Curve>& curves) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  const double left = 60.0, top = 40.0, w = 480.0, h = 320.0;
  std::vector<double> xs, ys;
  for (const auto& c : curves) {
    xs.insert(xs.end(), c.x.begin(), c.x.end());
    ys.insert(ys.end(), c.y.begin(), c.y.end());
  }
  const auto [x0, x1] = finite_range(xs);
  auto [y0, y1] = finite_range(ys);
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + w * (x - x0) / (x1 - x0); };
  auto py = [&](double y) { return top + h * (1.0 - (y - y0) / (y1 - y0)); };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      left + w + 150.0, top + h + 50.0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
                   left + w / 2.0, escape(title));
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
                   "fill=\"none\" stroke=\"black\"/>\n",
                   left, top, w, h);
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const Curve& cv = curves[c];
    std::string pts;
    for (std::size_t n = 0; n < std::min(cv.x.size(), cv.y.size()); ++n) {
      if (!std::isfinite(cv.y[n])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(cv.x[n]), py(cv.y[n]));
    }
    const char* color = colors[c % std::size(colors)];
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                     color, pts);
    const double ly = top + 14.0 + 18.0 * static_cast<double>(c);
    s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
                     "stroke=\"{}\" stroke-width=\"2\"/>\n",
                     left + w + 10.0, ly - 4.0, left + w + 30.0, ly - 4.0, color);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", left + w + 34.0, ly,
                     escape(cv.label));
  }
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                   left + w / 2.0, top + h + 35.0, escape(xlabel));
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", left,
                   top + h + 16.0, x0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                   left + w, top + h + 16.0, x1);
  s += fmt::format("<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", top + h / 2.0,
                   escape(ylabel));
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   left - 4.0, top + h, y0);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   left - 4.0, top + 10.0, y1);
  s += "</svg>\n";
  write_text(path, s);
}

}  // namespace rmfp
