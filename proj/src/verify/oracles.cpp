#include "geomae/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace geomae::oracle {

namespace {

using Table = std::vector<std::vector<double>>;

Table squared_distances(const Matrix& a) {
  const auto m = static_cast<std::size_t>(a.rows());
  Table d(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double t = a(static_cast<Eigen::Index>(i), c) - a(static_cast<Eigen::Index>(j), c);
        s += t * t;
      }
      d[i][j] = s;
    }
  }
  return d;
}

// Neighbors of i ordered by (distance, index), i itself excluded.
std::vector<std::size_t> neighbor_order(const Table& d, std::size_t i) {
  std::vector<std::pair<double, std::size_t>> v;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (j != i) v.emplace_back(d[i][j], j);
  }
  std::sort(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (const auto& p : v) out.push_back(p.second);
  return out;
}

bool contains(const std::vector<std::size_t>& v, std::size_t k, std::size_t j) {
  return std::find(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), j) != v.begin() + static_cast<std::ptrdiff_t>(k);
}

// Rank by counting: 1 + (number smaller) + (number of other equal values) / 2.
std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1.0;
      if (j != i && v[j] == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

}  // namespace

double knn_recall(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks) {
  const Table dx = squared_distances(x);
  const Table dz = squared_distances(z);
  const std::size_t m = dx.size();
  double total = 0.0;
  for (std::size_t k : ks) {
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto nx = neighbor_order(dx, i);
      const auto nz = neighbor_order(dz, i);
      for (std::size_t t = 0; t < k; ++t) hits += contains(nx, k, nz[t]) ? 1 : 0;
    }
    total += static_cast<double>(hits) / (static_cast<double>(m) * static_cast<double>(k));
  }
  return total / static_cast<double>(ks.size());
}

double trustworthiness(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks) {
  const Table dx = squared_distances(x);
  const Table dz = squared_distances(z);
  const std::size_t m = dx.size();
  double total = 0.0;
  for (std::size_t k : ks) {
    std::uint64_t penalty = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto nx = neighbor_order(dx, i);
      const auto nz = neighbor_order(dz, i);
      for (std::size_t t = 0; t < k; ++t) {
        const std::size_t j = nz[t];
        if (contains(nx, k, j)) continue;
        const std::size_t rank = static_cast<std::size_t>(std::find(nx.begin(), nx.end(), j) - nx.begin()) + 1;
        penalty += rank - k;
      }
    }
    const double md = static_cast<double>(m);
    const double kd = static_cast<double>(k);
    total += 1.0 - 2.0 / (md * kd * (2.0 * md - 3.0 * kd - 1.0)) * static_cast<double>(penalty);
  }
  return total / static_cast<double>(ks.size());
}

double stress(const Matrix& x, const Matrix& z) {
  const Table dx = squared_distances(x);
  const Table dz = squared_distances(z);
  double total = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    for (std::size_t j = i + 1; j < dx.size(); ++j) {
      const double d = std::sqrt(dx[i][j]) - std::sqrt(dz[i][j]);
      total += d * d;
    }
  }
  return total;
}

double spearman(const Matrix& x, const Matrix& z) {
  const Table dx = squared_distances(x);
  const Table dz = squared_distances(z);
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    for (std::size_t j = i + 1; j < dx.size(); ++j) {
      a.push_back(std::sqrt(dx[i][j]));
      b.push_back(std::sqrt(dz[i][j]));
    }
  }
  const auto ra = counting_ranks(a);
  const auto rb = counting_ranks(b);
  const double n = static_cast<double>(ra.size());
  double sa = 0.0, sb = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sa += ra[i];
    sb += rb[i];
    sab += ra[i] * rb[i];
    saa += ra[i] * ra[i];
    sbb += rb[i] * rb[i];
  }
  const double cov = sab - sa * sb / n;
  return cov / std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
}

double kl_sigma(const Matrix& x, const Matrix& z, double sigma) {
  auto density = [sigma](const Matrix& a) {
    const Table d = squared_distances(a);
    double diam2 = 0.0;
    for (const auto& row : d) diam2 = std::max(diam2, *std::max_element(row.begin(), row.end()));
    std::vector<double> f;
    double total = 0.0;
    for (const auto& row : d) {
      double s = 0.0;
      for (double v : row) s += std::exp(-v / (sigma * diam2));
      f.push_back(s);
      total += s;
    }
    for (double& v : f) v /= total;
    return f;
  };
  const auto p = density(x);
  const auto q = density(z);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  return kl;
}

double pca_residual_energy(const Matrix& x, std::size_t l) {
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix scatter = xc.transpose() * xc;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  // Eigenvalues come ascending; the largest l belong to the subspace.
  const Vector ev = eig.eigenvalues();
  double rest = 0.0;
  for (Eigen::Index i = 0; i + static_cast<Eigen::Index>(l) < ev.size(); ++i) rest += std::max(ev(i), 0.0);
  return rest;
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

bool point_in_polygon(std::span<const Point2> polygon, Point2 p) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

double land_area_fraction(const LandRaster& raster) {
  constexpr double rad = std::numbers::pi / 180.0;
  double covered = 0.0;
  for (std::size_t r = 0; r < raster.rows; ++r) {
    const double top = 90.0 - static_cast<double>(r) * raster.resolution;
    const double bottom = top - raster.resolution;
    const double band = std::sin(top * rad) - std::sin(bottom * rad);
    std::size_t cells = 0;
    for (std::size_t c = 0; c < raster.cols; ++c) cells += LandRaster::sampled(raster.at(r, c)) ? 1 : 0;
    covered += band * static_cast<double>(cells) / static_cast<double>(raster.cols);
  }
  // The band terms of all rows sum to 2.
  return covered / 2.0;
}

Matrix jacobian_fd(const MLPParams& decoder, std::span<const double> z, double h) {
  const auto l = static_cast<Eigen::Index>(z.size());
  Matrix jac(static_cast<Eigen::Index>(decoder.out_dim()), l);
  for (Eigen::Index c = 0; c < l; ++c) {
    Matrix up(1, l);
    for (Eigen::Index k = 0; k < l; ++k) up(0, k) = z[static_cast<std::size_t>(k)];
    Matrix down = up;
    up(0, c) += h;
    down(0, c) -= h;
    jac.col(c) = ((forward(decoder, up) - forward(decoder, down)) / (2.0 * h)).transpose();
  }
  return jac;
}

}  // namespace geomae::oracle
