#include "geomae/plotting.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace geomae {

namespace {

// Fixed two-decimal output through to_chars so the bytes do not depend on
// the C locale.
std::string num(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.00"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  std::string s(buf, res.ptr);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string tick_label(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
  return std::string(buf, res.ptr);
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string hex(int r, int g, int b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "#";
  for (int v : {r, g, b}) {
    v = std::clamp(v, 0, 255);
    s += digits[v / 16];
    s += digits[v % 16];
  }
  return s;
}

const Matrix& latents(const EmbeddingFrame& frame) {
  if (frame.size() == 0) throw std::invalid_argument("plot: empty frame");
  if (!frame.z) throw std::invalid_argument("plot: frame has no latent coordinates");
  if (frame.z->cols() != 2) throw std::invalid_argument("plot: latents must be two-dimensional");
  if (frame.z->rows() != frame.x.rows() && frame.x.rows() != 0) {
    throw std::invalid_argument("plot: inconsistent point counts");
  }
  return *frame.z;
}

// Maps data coordinates into the plot area with one scale for both axes.
class Frame {
 public:
  Frame(double x0, double y0, double x1, double y1, double left, double top, double w, double h) {
    double dx = x1 - x0;
    double dy = y1 - y0;
    if (dx <= 0.0) dx = 1.0;
    if (dy <= 0.0) dy = 1.0;
    scale_ = std::min(w / dx, h / dy);
    ox_ = left + 0.5 * (w - scale_ * dx) - scale_ * x0;
    oy_ = top + 0.5 * (h - scale_ * dy) + scale_ * y1;
  }
  double px(double x) const { return ox_ + scale_ * x; }
  double py(double y) const { return oy_ - scale_ * y; }

 private:
  double scale_ = 1.0;
  double ox_ = 0.0;
  double oy_ = 0.0;
};

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();
  void add(double x, double y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
  }
};

Bounds bounds_of(const Matrix& z) {
  Bounds b;
  for (Eigen::Index i = 0; i < z.rows(); ++i) b.add(z(i, 0), z(i, 1));
  return b;
}

void open_document(std::string& out, const PlotStyle& style) {
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(style.width) +
         "\" height=\"" + num(style.height) + "\" viewBox=\"0 0 " + num(style.width) + " " +
         num(style.height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(style.width) + "\" height=\"" + num(style.height) +
         "\" fill=\"#ffffff\"/>\n";
  if (!style.title.empty()) {
    out += "<text x=\"" + num(style.width / 2) + "\" y=\"" + num(style.margin * 0.7) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape(style.title) + "</text>\n";
  }
}

void circle(std::string& out, double cx, double cy, double r, const std::string& fill,
            const char* extra = "") {
  out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill +
         "\"" + extra + "/>\n";
}

}  // namespace

std::string category_color(int label) {
  static constexpr std::array<const char*, 10> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const int n = static_cast<int>(palette.size());
  return palette[static_cast<std::size_t>(((label % n) + n) % n)];
}

std::string diverging_color(double value, double lo, double hi) {
  if (!std::isfinite(value)) return kInvalidColor;
  // End points of the map; the middle is pure white.
  constexpr double blue[3] = {59, 76, 192};
  constexpr double red[3] = {180, 4, 38};
  double t = 0.0;
  const double* end = red;
  if (value > 0.0 && hi > 0.0) {
    t = std::min(value / hi, 1.0);
  } else if (value < 0.0 && lo < 0.0) {
    t = std::min(value / lo, 1.0);
    end = blue;
  }
  auto mix = [&](int c) { return static_cast<int>(std::lround(255.0 + t * (end[c] - 255.0))); };
  return hex(mix(0), mix(1), mix(2));
}

std::string scatter_svg(const EmbeddingFrame& frame, const PlotStyle& style) {
  const Matrix& z = latents(frame);
  std::string out;
  open_document(out, style);
  const Bounds b = bounds_of(z);
  const double legend_w = frame.names.empty() ? 0.0 : 130.0;
  const Frame f(b.x0, b.y0, b.x1, b.y1, style.margin, style.margin,
                style.width - 2 * style.margin - legend_w, style.height - 2 * style.margin);
  out += "<g stroke=\"none\" fill-opacity=\"0.8\">\n";
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int label = frame.labels.empty() ? 0 : frame.labels[static_cast<std::size_t>(i)];
    circle(out, f.px(z(i, 0)), f.py(z(i, 1)), style.point_radius, category_color(label));
  }
  out += "</g>\n";
  if (!frame.names.empty()) {
    std::vector<int> present(frame.labels.begin(), frame.labels.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    double y = style.margin + 8;
    const double x = style.width - style.margin - legend_w + 12;
    for (int label : present) {
      const std::string name = label >= 0 && static_cast<std::size_t>(label) < frame.names.size()
                                   ? frame.names[static_cast<std::size_t>(label)]
                                   : std::to_string(label);
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
             category_color(label) + "\"/>\n";
      out += "<text x=\"" + num(x + 16) + "\" y=\"" + num(y + 1) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(name) + "</text>\n";
      y += 16;
    }
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap_svg(const EmbeddingFrame& frame, const HeatmapValues& heat, const PlotStyle& style) {
  const Matrix& z = latents(frame);
  if (heat.values.size() != static_cast<std::size_t>(z.rows())) {
    throw std::invalid_argument("heatmap_svg: " + std::to_string(heat.values.size()) + " values for " +
                                std::to_string(z.rows()) + " points");
  }
  std::string out;
  open_document(out, style);
  const double bar_w = 80.0;
  const Bounds b = bounds_of(z);
  const Frame f(b.x0, b.y0, b.x1, b.y1, style.margin, style.margin,
                style.width - 2 * style.margin - bar_w, style.height - 2 * style.margin);
  out += "<g stroke=\"#b0b0b0\" stroke-width=\"0.2\">\n";
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double v = heat.values[static_cast<std::size_t>(i)];
    circle(out, f.px(z(i, 0)), f.py(z(i, 1)), style.point_radius, diverging_color(v, heat.lo, heat.hi));
  }
  out += "</g>\n";

  // Colorbar from hi (top) to lo (bottom) with 0 at white.
  const double bx = style.width - style.margin - bar_w + 20;
  const double by = style.margin + 10;
  const double bh = style.height - 2 * style.margin - 20;
  const double span = heat.hi - heat.lo;
  auto bar_y = [&](double v) { return span > 0.0 ? by + bh * (heat.hi - v) / span : by + 0.5 * bh; };
  out += "<defs><linearGradient id=\"cbar\" x1=\"0\" y1=\"0\" x2=\"0\" y2=\"1\">\n";
  const double zero_at = span > 0.0 ? std::clamp(heat.hi / span, 0.0, 1.0) : 0.5;
  out += "<stop offset=\"0\" stop-color=\"" + diverging_color(heat.hi, heat.lo, heat.hi) + "\"/>\n";
  out += "<stop offset=\"" + num(zero_at) + "\" stop-color=\"#ffffff\"/>\n";
  out += "<stop offset=\"1\" stop-color=\"" + diverging_color(heat.lo, heat.lo, heat.hi) + "\"/>\n";
  out += "</linearGradient></defs>\n";
  out += "<rect x=\"" + num(bx) + "\" y=\"" + num(by) + "\" width=\"14\" height=\"" + num(bh) +
         "\" fill=\"url(#cbar)\" stroke=\"#404040\" stroke-width=\"0.5\"/>\n";
  std::vector<double> ticks = {heat.hi};
  if (heat.lo < 0.0 && heat.hi > 0.0) ticks.push_back(0.0);
  if (heat.lo != heat.hi) ticks.push_back(heat.lo);
  for (double t : ticks) {
    const double y = bar_y(t);
    out += "<line x1=\"" + num(bx + 14) + "\" y1=\"" + num(y) + "\" x2=\"" + num(bx + 18) + "\" y2=\"" +
           num(y) + "\" stroke=\"#404040\" stroke-width=\"0.5\"/>\n";
    out += "<text x=\"" + num(bx + 21) + "\" y=\"" + num(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + tick_label(t) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string indicatrix_svg(const EmbeddingFrame& frame, std::span<const Indicatrix> indicatrices,
                           const PlotStyle& style) {
  const Matrix& z = latents(frame);
  std::string out;
  open_document(out, style);
  Bounds b = bounds_of(z);
  for (const Indicatrix& ind : indicatrices) {
    for (const Point2& p : ind.vertices) b.add(p.x, p.y);
  }
  const Frame f(b.x0, b.y0, b.x1, b.y1, style.margin, style.margin, style.width - 2 * style.margin,
                style.height - 2 * style.margin);
  out += "<g stroke=\"none\" fill-opacity=\"0.35\">\n";
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int label = frame.labels.empty() ? 0 : frame.labels[static_cast<std::size_t>(i)];
    circle(out, f.px(z(i, 0)), f.py(z(i, 1)), style.point_radius * 0.75, category_color(label));
  }
  out += "</g>\n<g fill=\"#f4a582\" fill-opacity=\"0.6\" stroke=\"#67001f\" stroke-width=\"0.6\">\n";
  for (const Indicatrix& ind : indicatrices) {
    if (ind.degenerate || ind.vertices.empty()) {
      // Infinitely flat indicatrix: mark the center with a cross.
      const double cx = f.px(ind.center.x);
      const double cy = f.py(ind.center.y);
      out += "<path d=\"M" + num(cx - 3) + " " + num(cy - 3) + "L" + num(cx + 3) + " " + num(cy + 3) + "M" +
             num(cx - 3) + " " + num(cy + 3) + "L" + num(cx + 3) + " " + num(cy - 3) +
             "\" fill=\"none\" stroke=\"#000000\"/>\n";
      continue;
    }
    out += "<polygon points=\"";
    for (std::size_t k = 0; k < ind.vertices.size(); ++k) {
      if (k > 0) out += ' ';
      out += num(f.px(ind.vertices[k].x)) + "," + num(f.py(ind.vertices[k].y));
    }
    out += "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace geomae
