#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "geomae/geometry.hpp"
#include "geomae/nn.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

double cross(Point2 o, Point2 a, Point2 b);

// Counterclockwise convex hull by Andrew's monotone chain. Collinear boundary
// points are dropped. Throws std::invalid_argument for fewer than three
// distinct points or an all-collinear input.
std::vector<Point2> convex_hull(std::vector<Point2> points);

// Point-in-convex-polygon for a counterclockwise hull; boundary counts as
// inside (with a tolerance relative to the hull's extent).
bool inside_or_on(std::span<const Point2> hull, Point2 p);

// Signed shoelace area (positive for counterclockwise order).
double polygon_area(std::span<const Point2> polygon);
double polygon_diameter(std::span<const Point2> polygon);

std::vector<Point2> rows_as_points(const Matrix& z);

struct LatentGrid {
  std::vector<Point2> points;
  double spacing = 0.0;  // smaller of the two axis spacings
};

// steps x steps regular grid over the bounding box of z (edges included),
// keeping the points inside the convex hull of z.
LatentGrid latent_grid(const Matrix& z, std::size_t steps);

struct Indicatrix {
  Point2 center;
  std::vector<Point2> vertices;  // counterclockwise, absolute coordinates
  double raw_area = 0.0;         // area before any display scaling
  bool degenerate = false;       // metric not positive definite at center
};

// Unit ball of a 2x2 metric around `center`: n_samples directions at angles
// phase + 2*pi*i/n, each divided by its metric norm, then convex hull.
Indicatrix indicatrix_from_metric(const PullbackMetric& metric, Point2 center,
                                  std::size_t n_samples, double phase = 0.0);
Indicatrix indicatrix_at(const MLPParams& decoder, Point2 p, std::size_t n_samples);
std::vector<Indicatrix> indicatrices_at(const MLPParams& decoder, std::span<const Point2> points,
                                        std::size_t n_samples);

// Applies one global factor about each center so that the median diameter of
// the non-degenerate polygons equals target_fraction * grid_spacing.
std::vector<Indicatrix> scale_indicatrices(std::vector<Indicatrix> indicatrices,
                                           double target_fraction, double grid_spacing);

struct HeatmapValues {
  std::vector<double> raw;     // normalized values before clipping (NaN if invalid)
  std::vector<double> values;  // clipped to [lo, hi] (NaN if invalid)
  std::vector<bool> valid;     // false where det(g) <= 0
  double lo = 0.0;
  double hi = 0.0;
  bool mean_fallback = false;  // mean log-det ~ 0: values are log-det minus mean
};

// Linear interpolation between order statistics of sorted data (type 7).
double quantile_sorted(std::span<const double> sorted, double q);

// log(det) / mean(log det) - 1, or log(det) - mean when the mean is within
// 1e-12 of zero. Non-positive determinants are flagged and left out of the
// mean and of the 5%/95% clip bounds.
HeatmapValues heatmap_from_determinants(std::span<const double> dets);
HeatmapValues det_heatmap(const MLPParams& decoder, const Matrix& z);

// Line-oriented text formats (see docs/formats.md).
void write_heatmap_csv(std::ostream& os, const Matrix& z, const HeatmapValues& heat);
void write_indicatrices(std::ostream& os, std::span<const Indicatrix> indicatrices);
std::vector<Indicatrix> read_indicatrices(std::istream& is);

}  // namespace geomae
