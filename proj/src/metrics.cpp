#include "geomae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geomae/errors.hpp"
#include "geomae/parallel.hpp"

namespace geomae {

namespace {

void require_paired(const Matrix& x, const Matrix& z) {
  if (x.rows() != z.rows()) {
    throw ShapeError("metrics: X has " + std::to_string(x.rows()) + " rows, Z has " +
                     std::to_string(z.rows()));
  }
}

// Plain left-to-right sum so results do not depend on vectorization.
double sq_dist(const Matrix& a, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - a(j, c);
    s += d * d;
  }
  return s;
}

void require_neighbors(std::size_t m, std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("metrics: empty k list");
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  if (std::find(ks.begin(), ks.end(), std::size_t{0}) != ks.end()) {
    throw std::invalid_argument("metrics: k must be positive");
  }
  if (m <= kmax) {
    throw std::invalid_argument("metrics: need more than " + std::to_string(kmax) + " points, got " +
                                std::to_string(m));
  }
}

struct NeighborStats {
  std::vector<std::uint64_t> shared;     // per k: sum_i |kNN_Z(i) & kNN_X(i)|
  std::vector<std::uint64_t> intrusion;  // per k: sum_i sum_{j in U_k(i)} (rank_X(i,j) - k)
};

// One pass over all points collecting what both kNN recall and
// trustworthiness need.
NeighborStats neighbor_stats(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks) {
  const auto m = static_cast<std::size_t>(x.rows());
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  const std::size_t nk = ks.size();
  std::vector<std::uint64_t> shared(m * nk, 0);
  std::vector<std::uint64_t> intrusion(m * nk, 0);

  parallel_for(m, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::vector<double> dx(m);
    std::vector<double> dz(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      dx[j] = sq_dist(x, ii, jj);
      dz[j] = sq_dist(z, ii, jj);
    }
    std::vector<std::size_t> order;
    order.reserve(m - 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) order.push_back(j);
    }
    std::vector<std::size_t> order_z = order;
    auto by = [](const std::vector<double>& d) {
      return [&d](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); };
    };
    std::sort(order.begin(), order.end(), by(dx));
    std::vector<std::size_t> rank_x(m, 0);
    for (std::size_t r = 0; r < order.size(); ++r) rank_x[order[r]] = r + 1;
    std::partial_sort(order_z.begin(), order_z.begin() + static_cast<std::ptrdiff_t>(kmax),
                      order_z.end(), by(dz));
    for (std::size_t a = 0; a < nk; ++a) {
      const std::size_t k = ks[a];
      std::uint64_t hits = 0;
      std::uint64_t penalty = 0;
      for (std::size_t t = 0; t < k; ++t) {
        const std::size_t r = rank_x[order_z[t]];
        if (r <= k) {
          ++hits;
        } else {
          penalty += r - k;
        }
      }
      shared[i * nk + a] = hits;
      intrusion[i * nk + a] = penalty;
    }
  });

  NeighborStats stats{std::vector<std::uint64_t>(nk, 0), std::vector<std::uint64_t>(nk, 0)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < nk; ++a) {
      stats.shared[a] += shared[i * nk + a];
      stats.intrusion[a] += intrusion[i * nk + a];
    }
  }
  return stats;
}

double knn_from_stats(const NeighborStats& s, std::size_t m, std::span<const std::size_t> ks) {
  double total = 0.0;
  for (std::size_t a = 0; a < ks.size(); ++a) {
    total += static_cast<double>(s.shared[a]) / (static_cast<double>(m) * static_cast<double>(ks[a]));
  }
  return total / static_cast<double>(ks.size());
}

double trust_from_stats(const NeighborStats& s, std::size_t m, std::span<const std::size_t> ks) {
  double total = 0.0;
  const auto md = static_cast<double>(m);
  for (std::size_t a = 0; a < ks.size(); ++a) {
    const auto k = static_cast<double>(ks[a]);
    const double denom = md * k * (2.0 * md - 3.0 * k - 1.0);
    if (!(denom > 0.0)) {
      throw std::invalid_argument("trustworthiness: k = " + std::to_string(ks[a]) +
                                  " too large for " + std::to_string(m) + " points");
    }
    total += 1.0 - 2.0 / denom * static_cast<double>(s.intrusion[a]);
  }
  return total / static_cast<double>(ks.size());
}

void check_trust_denominators(std::size_t m, std::span<const std::size_t> ks) {
  for (std::size_t k : ks) {
    if (2 * m <= 3 * k + 1) {
      throw std::invalid_argument("trustworthiness: k = " + std::to_string(k) + " too large for " +
                                  std::to_string(m) + " points");
    }
  }
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericError("spearman: zero-variance rank vector");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> dtm_density(const Matrix& a, double sigma) {
  const auto m = static_cast<std::size_t>(a.rows());
  std::vector<double> sq(m * m);
  double diam2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = sq_dist(a, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      sq[i * m + j] = d;
      diam2 = std::max(diam2, d);
    }
  }
  if (!(diam2 > 0.0)) throw NumericError("kl_sigma: point set has zero diameter");
  std::vector<double> f(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) f[i] += std::exp(-sq[i * m + j] / (sigma * diam2));
    total += f[i];
  }
  for (double& v : f) v /= total;
  return f;
}

}  // namespace

std::vector<std::size_t> default_ks() {
  std::vector<std::size_t> ks;
  for (std::size_t k = 10; k <= 200; k += 10) ks.push_back(k);
  return ks;
}

double knn_recall(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks) {
  require_paired(x, z);
  const auto m = static_cast<std::size_t>(x.rows());
  require_neighbors(m, ks);
  return knn_from_stats(neighbor_stats(x, z, ks), m, ks);
}

double trustworthiness(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks) {
  require_paired(x, z);
  const auto m = static_cast<std::size_t>(x.rows());
  require_neighbors(m, ks);
  check_trust_denominators(m, ks);
  return trust_from_stats(neighbor_stats(x, z, ks), m, ks);
}

double stress(const Matrix& x, const Matrix& z) {
  require_paired(x, z);
  if (x.rows() < 2) throw std::invalid_argument("stress needs at least two points");
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const double d = std::sqrt(sq_dist(x, i, j)) - std::sqrt(sq_dist(z, i, j));
      total += d * d;
    }
  }
  return total;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t stop = start + 1;
    while (stop < order.size() && values[order[stop]] == values[order[start]]) ++stop;
    const double shared = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t t = start; t < stop; ++t) ranks[order[t]] = shared;
    start = stop;
  }
  return ranks;
}

double spearman_distances(const Matrix& x, const Matrix& z, std::uint64_t seed) {
  require_paired(x, z);
  const auto m = static_cast<std::size_t>(x.rows());
  if (m < 3) throw std::invalid_argument("spearman needs at least three points");
  std::vector<double> dx;
  std::vector<double> dz;
  auto push = [&](std::size_t i, std::size_t j) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    dx.push_back(std::sqrt(sq_dist(x, ii, jj)));
    dz.push_back(std::sqrt(sq_dist(z, ii, jj)));
  };
  if (m <= kSpearmanExactLimit) {
    dx.reserve(m * (m - 1) / 2);
    dz.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) push(i, j);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    dx.reserve(kSpearmanPairSample);
    dz.reserve(kSpearmanPairSample);
    while (dx.size() < kSpearmanPairSample) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      if (i != j) push(i, j);
    }
  }
  const auto rx = average_ranks(dx);
  const auto rz = average_ranks(dz);
  return pearson(rx, rz);
}

double kl_sigma(const Matrix& x, const Matrix& z, double sigma) {
  require_paired(x, z);
  if (!(sigma > 0.0)) throw std::invalid_argument("kl_sigma: sigma must be positive");
  if (x.rows() < 2) throw std::invalid_argument("kl_sigma needs at least two points");
  const auto p = dtm_density(x, sigma);
  const auto q = dtm_density(z, sigma);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

std::vector<std::size_t> subsample_indices(std::size_t m, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) throw std::invalid_argument("subsample fraction must be in (0, 1]");
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m))));
  if (count >= m) return idx;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

const MetricValue& MetricsReport::at(const std::string& name) const {
  for (const MetricValue& v : values) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("no metric named " + name);
}

MetricsReport evaluate_embedding(const Matrix& x, const Matrix& z, const std::string& model,
                                 const EvalOptions& options) {
  require_paired(x, z);
  const auto m = static_cast<std::size_t>(x.rows());
  const auto idx = subsample_indices(m, options.subsample, options.seed);
  const Matrix xs = take_rows(x, idx);
  const Matrix zs = take_rows(z, idx);
  const std::size_t n = idx.size();
  require_neighbors(n, options.ks);
  check_trust_denominators(n, options.ks);

  MetricsReport report;
  report.model = model;
  report.points_total = m;
  report.points_evaluated = n;
  report.seed = options.seed;
  report.ks = options.ks;
  report.spearman_pairs_sampled = n > kSpearmanExactLimit;

  const NeighborStats stats = neighbor_stats(xs, zs, options.ks);
  using enum Direction;
  report.values = {
      {"KL_0.1", kl_sigma(xs, zs, 0.1), lower_is_better},
      {"kNN", knn_from_stats(stats, n, options.ks), higher_is_better},
      {"Trust", trust_from_stats(stats, n, options.ks), higher_is_better},
      {"Stress", stress(xs, zs), lower_is_better},
      {"KL_100", kl_sigma(xs, zs, 100.0), lower_is_better},
      {"Spear", spearman_distances(xs, zs, options.seed), higher_is_better},
  };
  return report;
}

std::string reports_to_csv(std::span<const MetricsReport> reports) {
  std::ostringstream os;
  os.precision(17);
  os << "model";
  if (!reports.empty()) {
    for (const MetricValue& v : reports.front().values) os << ',' << v.name;
  }
  os << ",points_total,points_evaluated,seed,k_min,k_max,k_count,spearman_pairs_sampled\n";
  for (const MetricsReport& r : reports) {
    os << r.model;
    for (const MetricValue& v : r.values) os << ',' << v.value;
    os << ',' << r.points_total << ',' << r.points_evaluated << ',' << r.seed << ','
       << (r.ks.empty() ? 0 : r.ks.front()) << ',' << (r.ks.empty() ? 0 : r.ks.back()) << ','
       << r.ks.size() << ',' << (r.spearman_pairs_sampled ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string reports_to_table(std::span<const MetricsReport> reports) {
  std::ostringstream os;
  if (reports.empty()) return {};
  std::size_t name_w = 5;
  for (const MetricsReport& r : reports) name_w = std::max(name_w, r.model.size());
  os << std::left << std::setw(static_cast<int>(name_w)) << "Model";
  for (const MetricValue& v : reports.front().values) {
    const char* arrow = v.direction == Direction::higher_is_better ? " (+)" : " (-)";
    os << "  " << std::right << std::setw(14) << (v.name + arrow);
  }
  os << '\n';
  for (const MetricsReport& r : reports) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.model;
    for (const MetricValue& v : r.values) {
      std::ostringstream cell;
      cell << std::setprecision(6) << v.value;
      os << "  " << std::right << std::setw(14) << cell.str();
    }
    os << '\n';
  }
  return os.str();
}

ScoreTable::ScoreTable(std::vector<std::string> datasets_, std::vector<std::string> models_,
                       std::vector<std::string> metrics_, std::vector<Direction> directions_)
    : datasets(std::move(datasets_)),
      models(std::move(models_)),
      metrics(std::move(metrics_)),
      directions(std::move(directions_)) {
  if (directions.size() != metrics.size()) {
    throw std::invalid_argument("score table: one direction per metric required");
  }
  values.assign(datasets.size(),
                std::vector<std::vector<std::optional<double>>>(
                    models.size(), std::vector<std::optional<double>>(metrics.size())));
}

void ScoreTable::set(std::size_t dataset, std::size_t model, std::size_t metric, double value) {
  values.at(dataset).at(model).at(metric) = value;
}

RankReport aggregate_ranks(const ScoreTable& table) {
  const std::size_t nd = table.datasets.size();
  const std::size_t nm = table.models.size();
  const std::size_t nk = table.metrics.size();
  if (nd == 0 || nm == 0 || nk == 0) throw std::invalid_argument("aggregate_ranks: empty table");
  RankReport report{table.models, table.metrics,
                    std::vector<std::vector<double>>(nm, std::vector<double>(nk, 0.0)),
                    std::vector<double>(nm, 0.0)};
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t k = 0; k < nk; ++k) {
      std::vector<double> column(nm);
      for (std::size_t mi = 0; mi < nm; ++mi) {
        const auto& cell = table.values[d][mi][k];
        if (!cell) {
          throw std::invalid_argument("aggregate_ranks: missing value for " + table.models[mi] +
                                      " / " + table.metrics[k] + " on " + table.datasets[d]);
        }
        // Negate so rank 1 always goes to the best value.
        column[mi] = table.directions[k] == Direction::higher_is_better ? -*cell : *cell;
      }
      const auto ranks = average_ranks(column);
      for (std::size_t mi = 0; mi < nm; ++mi) report.mean_rank[mi][k] += ranks[mi] / static_cast<double>(nd);
    }
  }
  for (std::size_t mi = 0; mi < nm; ++mi) {
    for (std::size_t k = 0; k < nk; ++k) report.overall[mi] += report.mean_rank[mi][k] / static_cast<double>(nk);
  }
  return report;
}

std::string RankReport::to_table() const {
  std::ostringstream os;
  std::size_t name_w = 5;
  for (const auto& m : models) name_w = std::max(name_w, m.size());
  os << std::left << std::setw(static_cast<int>(name_w)) << "Model";
  for (const auto& k : metrics) os << "  " << std::right << std::setw(8) << k;
  os << "  " << std::setw(8) << "<Rank>" << '\n';
  os << std::fixed << std::setprecision(2);
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    os << std::left << std::setw(static_cast<int>(name_w)) << models[mi];
    for (double r : mean_rank[mi]) os << "  " << std::right << std::setw(8) << r;
    os << "  " << std::setw(8) << overall[mi] << '\n';
  }
  return os.str();
}

std::string RankReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "model";
  for (const auto& k : metrics) os << ',' << k;
  os << ",rank\n";
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    os << models[mi];
    for (double r : mean_rank[mi]) os << ',' << r;
    os << ',' << overall[mi] << '\n';
  }
  return os.str();
}

}  // namespace geomae
