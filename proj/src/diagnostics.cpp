#include "geomae/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "geomae/autodiff.hpp"
#include "geomae/errors.hpp"

namespace geomae {

std::vector<Point2> rows_as_points(const Matrix& z) {
  if (z.cols() != 2) throw ShapeError("expected a 2D embedding, got " + std::to_string(z.cols()) + " columns");
  std::vector<Point2> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = {z(i, 0), z(i, 1)};
  return out;
}

LatentGrid latent_grid(const Matrix& z, std::size_t steps) {
  if (z.rows() == 0) throw std::invalid_argument("latent_grid: empty embedding");
  if (steps < 2) throw std::invalid_argument("latent_grid: need at least 2 steps per axis");
  std::vector<Point2> hull;
  try {
    hull = convex_hull(rows_as_points(z));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("latent_grid: degenerate (zero-area) embedding");
  }
  if (std::abs(polygon_area(hull)) == 0.0) {
    throw std::invalid_argument("latent_grid: degenerate (zero-area) embedding");
  }
  const double x0 = z.col(0).minCoeff();
  const double x1 = z.col(0).maxCoeff();
  const double y0 = z.col(1).minCoeff();
  const double y1 = z.col(1).maxCoeff();
  const double denom = static_cast<double>(steps - 1);
  LatentGrid grid;
  grid.spacing = std::min((x1 - x0) / denom, (y1 - y0) / denom);
  for (std::size_t r = 0; r < steps; ++r) {
    // Exact endpoints so the bounding-box corners are representable.
    const double y = r + 1 == steps ? y1 : y0 + (y1 - y0) * static_cast<double>(r) / denom;
    for (std::size_t c = 0; c < steps; ++c) {
      const double x = c + 1 == steps ? x1 : x0 + (x1 - x0) * static_cast<double>(c) / denom;
      if (inside_or_on(hull, {x, y})) grid.points.push_back({x, y});
    }
  }
  return grid;
}

Indicatrix indicatrix_from_metric(const PullbackMetric& metric, Point2 center,
                                  std::size_t n_samples, double phase) {
  if (metric.dim() != 2) throw ShapeError("indicatrices need a 2D latent space");
  if (n_samples < 3) throw std::invalid_argument("indicatrix needs at least 3 directions");
  const Tensor& g = metric.g;
  Indicatrix ind;
  ind.center = center;
  const SymEigen2 e = sym_eigen2(g[0], 0.5 * (g[1] + g[2]), g[3]);
  if (!(e.lambda_min > 0.0)) {
    ind.degenerate = true;
    return ind;
  }
  std::vector<Point2> dirs;
  dirs.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_samples);
    const double vx = std::cos(t);
    const double vy = std::sin(t);
    const double norm2 = g[0] * vx * vx + (g[1] + g[2]) * vx * vy + g[3] * vy * vy;
    const double s = 1.0 / std::sqrt(norm2);
    dirs.push_back({s * vx, s * vy});
  }
  std::vector<Point2> hull = convex_hull(std::move(dirs));
  ind.raw_area = polygon_area(hull);
  for (Point2& v : hull) v = center + v;
  ind.vertices = std::move(hull);
  return ind;
}

Indicatrix indicatrix_at(const MLPParams& decoder, Point2 p, std::size_t n_samples) {
  const double z[2] = {p.x, p.y};
  return indicatrix_from_metric(metric_at(decoder, z), p, n_samples);
}

std::vector<Indicatrix> indicatrices_at(const MLPParams& decoder, std::span<const Point2> points,
                                        std::size_t n_samples) {
  Matrix z(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    z(static_cast<Eigen::Index>(i), 0) = points[i].x;
    z(static_cast<Eigen::Index>(i), 1) = points[i].y;
  }
  std::vector<Indicatrix> out;
  out.reserve(points.size());
  const auto metrics = metrics_at(decoder, z);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back(indicatrix_from_metric(metrics[i], points[i], n_samples));
  }
  return out;
}

std::vector<Indicatrix> scale_indicatrices(std::vector<Indicatrix> indicatrices,
                                           double target_fraction, double grid_spacing) {
  if (indicatrices.empty()) throw std::invalid_argument("scale_indicatrices: empty list");
  std::vector<double> diameters;
  for (const Indicatrix& ind : indicatrices) {
    if (!ind.degenerate) diameters.push_back(polygon_diameter(ind.vertices));
  }
  if (diameters.empty()) return indicatrices;
  std::sort(diameters.begin(), diameters.end());
  const double median = quantile_sorted(diameters, 0.5);
  if (!(median > 0.0)) return indicatrices;
  const double factor = target_fraction * grid_spacing / median;
  for (Indicatrix& ind : indicatrices) {
    for (Point2& v : ind.vertices) v = ind.center + factor * (v - ind.center);
  }
  return indicatrices;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

void normalize_log_dets(HeatmapValues& heat, std::span<const double> log_dets, double mean) {
  heat.mean_fallback = std::abs(mean) <= 1e-12;
  for (std::size_t i = 0; i < log_dets.size(); ++i) {
    if (!heat.valid[i]) continue;
    heat.raw[i] = heat.mean_fallback ? log_dets[i] - mean : (log_dets[i] - mean) / mean;
  }
}

}  // namespace

HeatmapValues heatmap_from_determinants(std::span<const double> dets) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  HeatmapValues heat;
  heat.raw.assign(dets.size(), nan);
  heat.values.assign(dets.size(), nan);
  heat.valid.assign(dets.size(), false);
  std::vector<double> logs(dets.size(), nan);
  // Running mean, so that equal log-dets give exactly their common value.
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i] > 0.0 && std::isfinite(dets[i])) {
      heat.valid[i] = true;
      logs[i] = std::log(dets[i]);
      ++count;
      mean += (logs[i] - mean) / static_cast<double>(count);
    }
  }
  if (count == 0) throw NumericError("determinant heatmap: no point has a positive determinant");
  normalize_log_dets(heat, logs, mean);

  std::vector<double> sorted;
  sorted.reserve(count);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (heat.valid[i]) sorted.push_back(heat.raw[i]);
  }
  std::sort(sorted.begin(), sorted.end());
  heat.lo = quantile_sorted(sorted, 0.05);
  heat.hi = quantile_sorted(sorted, 0.95);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (heat.valid[i]) heat.values[i] = std::clamp(heat.raw[i], heat.lo, heat.hi);
  }
  return heat;
}

HeatmapValues det_heatmap(const MLPParams& decoder, const Matrix& z) {
  return heatmap_from_determinants(gen_jac_dets(decoder, z));
}

void write_heatmap_csv(std::ostream& os, const Matrix& z, const HeatmapValues& heat) {
  if (static_cast<std::size_t>(z.rows()) != heat.values.size() || z.cols() != 2) {
    throw ShapeError("heatmap CSV: embedding and values disagree");
  }
  const auto old = os.precision(17);
  os << "x,y,value,raw,valid\n";
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    os << z(i, 0) << ',' << z(i, 1) << ',' << heat.values[k] << ',' << heat.raw[k] << ','
       << (heat.valid[k] ? 1 : 0) << '\n';
  }
  os.precision(old);
}

void write_indicatrices(std::ostream& os, std::span<const Indicatrix> indicatrices) {
  const auto old = os.precision(17);
  os << "# geomae indicatrices v1\n";
  for (const Indicatrix& ind : indicatrices) {
    os << "indicatrix " << ind.center.x << ' ' << ind.center.y << ' ' << ind.raw_area << ' '
       << ind.vertices.size() << ' ' << (ind.degenerate ? 1 : 0) << '\n';
    for (Point2 v : ind.vertices) os << v.x << ' ' << v.y << '\n';
  }
  os.precision(old);
}

std::vector<Indicatrix> read_indicatrices(std::istream& is) {
  std::vector<Indicatrix> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    Indicatrix ind;
    std::size_t count = 0;
    int degenerate = 0;
    if (!(ls >> tag >> ind.center.x >> ind.center.y >> ind.raw_area >> count >> degenerate) ||
        tag != "indicatrix") {
      throw FormatError("indicatrix file line " + std::to_string(lineno) + ": bad header");
    }
    ind.degenerate = degenerate != 0;
    for (std::size_t k = 0; k < count; ++k) {
      Point2 v;
      if (!std::getline(is, line)) throw FormatError("indicatrix file truncated");
      ++lineno;
      std::istringstream vs(line);
      if (!(vs >> v.x >> v.y)) {
        throw FormatError("indicatrix file line " + std::to_string(lineno) + ": bad vertex");
      }
      ind.vertices.push_back(v);
    }
    out.push_back(std::move(ind));
  }
  return out;
}

}  // namespace geomae
