#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomae/tensor.hpp"

namespace geomae {

// k = 10, 20, ..., 200.
std::vector<std::size_t> default_ks();

// Neighborhoods exclude the query point; distance ties are broken by
// ascending index. Both metrics average over `ks`.
double knn_recall(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks);
double trustworthiness(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks);

// Sum over pairs i < j of (d_X(i,j) - d_Z(i,j))^2.
double stress(const Matrix& x, const Matrix& z);

// Spearman correlation between the pairwise distances in X and Z (average
// ranks for ties). Above kSpearmanExactLimit points, a seeded sample of
// kSpearmanPairSample pairs is used instead of all pairs.
inline constexpr std::size_t kSpearmanExactLimit = 2000;
inline constexpr std::size_t kSpearmanPairSample = 1'000'000;
double spearman_distances(const Matrix& x, const Matrix& z, std::uint64_t seed = 0);

// KL(f_X || f_Z) between distance-to-measure densities
//   f(x_i) = sum_j exp(-|x_i - x_j|^2 / (sigma * diam^2)),
// each normalized to sum 1 over the evaluation points; diam is the diameter
// of the respective point set.
double kl_sigma(const Matrix& x, const Matrix& z, double sigma);

// Average ranks (1-based) of the values; ties share the mean position.
std::vector<double> average_ranks(std::span<const double> values);

// Seeded subset of round(fraction * m) distinct indices, sorted ascending.
std::vector<std::size_t> subsample_indices(std::size_t m, double fraction, std::uint64_t seed);
Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows);

enum class Direction { higher_is_better, lower_is_better };

struct MetricValue {
  std::string name;
  double value = 0.0;
  Direction direction = Direction::higher_is_better;
};

struct EvalOptions {
  std::vector<std::size_t> ks = default_ks();
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  std::string model;
  std::vector<MetricValue> values;  // KL_0.1, kNN, Trust, Stress, KL_100, Spear
  std::size_t points_total = 0;
  std::size_t points_evaluated = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> ks;
  bool spearman_pairs_sampled = false;

  const MetricValue& at(const std::string& name) const;
};

// Evaluates the six embedding metrics on a seeded subsample shared by all of them.
MetricsReport evaluate_embedding(const Matrix& x, const Matrix& z, const std::string& model,
                                 const EvalOptions& options);

std::string reports_to_csv(std::span<const MetricsReport> reports);
std::string reports_to_table(std::span<const MetricsReport> reports);

// Per-dataset x per-model x per-metric scores for rank aggregation.
struct ScoreTable {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::vector<std::string> metrics;
  std::vector<Direction> directions;  // one per metric
  // values[dataset][model][metric]
  std::vector<std::vector<std::vector<std::optional<double>>>> values;

  ScoreTable(std::vector<std::string> datasets, std::vector<std::string> models,
             std::vector<std::string> metrics, std::vector<Direction> directions);
  void set(std::size_t dataset, std::size_t model, std::size_t metric, double value);
};

struct RankReport {
  std::vector<std::string> models;
  std::vector<std::string> metrics;
  std::vector<std::vector<double>> mean_rank;  // [model][metric], mean over datasets
  std::vector<double> overall;                 // [model], mean over metrics

  std::string to_table() const;
  std::string to_csv() const;
};

// Ranks models per (dataset, metric), 1 = best, ties share the mean of their
// positions; then averages over datasets and over metrics. Throws
// std::invalid_argument on a missing cell.
RankReport aggregate_ranks(const ScoreTable& table);

}  // namespace geomae
