#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geomae/diagnostics.hpp"

namespace geomae {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Point2> convex_hull(std::vector<Point2> points) {
  std::sort(points.begin(), points.end(),
            [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) throw std::invalid_argument("convex hull needs three distinct points");

  const std::size_t n = points.size();
  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw std::invalid_argument("convex hull of collinear points");
  return hull;
}

bool inside_or_on(std::span<const Point2> hull, Point2 p) {
  double extent = 0.0;
  for (Point2 q : hull) extent = std::max({extent, std::abs(q.x), std::abs(q.y)});
  const double tol = 1e-12 * std::max(1.0, extent * extent);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 a = hull[i];
    const Point2 b = hull[(i + 1) % hull.size()];
    if (cross(a, b, p) < -tol) return false;
  }
  return true;
}

double polygon_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double polygon_diameter(std::span<const Point2> polygon) {
  double best = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    for (std::size_t j = i + 1; j < polygon.size(); ++j) {
      best = std::max(best, std::hypot(polygon[i].x - polygon[j].x, polygon[i].y - polygon[j].y));
    }
  }
  return best;
}

}  // namespace geomae
