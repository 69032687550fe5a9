#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "geomae/metrics.hpp"
#include "geomae/oracles.hpp"

using namespace geomae;

namespace {

Matrix gaussian(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix x(m, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

}  // namespace

TEST_CASE("metrics agree with brute-force oracles") {
  const std::vector<std::size_t> ks{2, 4, 7};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = gaussian(25, 4, seed);
    const Matrix z = gaussian(25, 2, seed + 100);
    CHECK(knn_recall(x, z, ks) == oracle::knn_recall(x, z, ks));
    CHECK(trustworthiness(x, z, ks) == oracle::trustworthiness(x, z, ks));
    CHECK(stress(x, z) == oracle::stress(x, z));
    CHECK(spearman_distances(x, z) == doctest::Approx(oracle::spearman(x, z)).epsilon(1e-12));
    for (double sigma : {0.1, 1.0, 100.0}) {
      CHECK(kl_sigma(x, z, sigma) == doctest::Approx(oracle::kl_sigma(x, z, sigma)).epsilon(1e-12));
    }
  }
}

TEST_CASE("identity embedding is perfect") {
  const Matrix x = gaussian(40, 3, 9);
  const std::vector<std::size_t> ks{5, 10};
  CHECK(knn_recall(x, x, ks) == 1.0);
  CHECK(trustworthiness(x, x, ks) == 1.0);
  CHECK(stress(x, x) == 0.0);
  CHECK(spearman_distances(x, x) == doctest::Approx(1.0));
  CHECK(kl_sigma(x, x, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("trustworthiness of a hand-checked case") {
  // Points 1 and 2 swap places in the embedding; no distance ties.
  Matrix x(4, 1);
  x << 0, 1, 2.5, 4.5;
  Matrix z(4, 1);
  z << 0, 2.5, 1, 4.5;
  const std::vector<std::size_t> ks{1};
  // Latent neighbours 2, 2, 0, 1 have input ranks 2, 2, 3, 2: penalty 1+1+2+1.
  // T = 1 - 2 / (4 * 1 * (8 - 3 - 1)) * 5
  CHECK(trustworthiness(x, z, ks) == doctest::Approx(0.375));
  // input neighbours are 1, 0, 1, 2: no hits
  CHECK(knn_recall(x, z, ks) == 0.0);
}

TEST_CASE("stress is the sum of squared distance differences") {
  Matrix x(3, 1);
  x << 0, 1, 3;
  Matrix z(3, 1);
  z << 0, 2, 3;
  // pairs: (1 vs 2), (3 vs 3), (2 vs 1)
  CHECK(stress(x, z) == doctest::Approx(2.0));
}

TEST_CASE("metrics reject impossible neighbourhoods") {
  const Matrix x = gaussian(10, 2, 1);
  const std::vector<std::size_t> big{10};
  CHECK_THROWS_AS(knn_recall(x, x, big), std::invalid_argument);
  const std::vector<std::size_t> zero{0};
  CHECK_THROWS_AS(trustworthiness(x, x, zero), std::invalid_argument);
  CHECK_THROWS_AS(stress(x, gaussian(9, 2, 1)), std::invalid_argument);
}

TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  const auto r = average_ranks(v);
  CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("subsample is seeded, sorted and distinct") {
  const auto a = subsample_indices(1000, 0.1, 5);
  CHECK(a.size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(a == subsample_indices(1000, 0.1, 5));
  CHECK(a != subsample_indices(1000, 0.1, 6));
  CHECK(subsample_indices(10, 1.0, 0).size() == 10);
  CHECK_THROWS_AS(subsample_indices(10, 0.0, 0), std::invalid_argument);
}

TEST_CASE("spearman pair sampling kicks in on large inputs and is seeded") {
  const Matrix x = gaussian(2100, 3, 2);
  const Matrix z = x.leftCols(2);
  const double a = spearman_distances(x, z, 4);
  CHECK(a == spearman_distances(x, z, 4));
  CHECK(a > 0.5);
  CHECK(a < 1.0);
}

TEST_CASE("evaluate_embedding reports every metric with its direction") {
  const Matrix x = gaussian(300, 4, 3);
  EvalOptions opt;
  opt.ks = {5, 10};
  opt.subsample = 0.5;
  opt.seed = 1;
  const MetricsReport r = evaluate_embedding(x, x, "self", opt);
  CHECK(r.points_total == 300);
  CHECK(r.points_evaluated == 150);
  REQUIRE(r.values.size() == 6);
  CHECK(r.at("kNN").value == 1.0);
  CHECK(r.at("Trust").value == 1.0);
  CHECK(r.at("Stress").value == 0.0);
  CHECK(r.at("Spear").value == doctest::Approx(1.0));
  CHECK(r.at("KL_0.1").direction == Direction::lower_is_better);
  CHECK_THROWS(r.at("RMSE"));
  const std::vector<MetricsReport> rs{r};
  const std::string csv = reports_to_csv(rs);
  CHECK(csv.rfind("model,KL_0.1,kNN,Trust,Stress,KL_100,Spear,points_total", 0) == 0);
}

TEST_CASE("rank aggregation on a small table") {
  ScoreTable t({"d1", "d2"}, {"a", "b", "c"}, {"up", "down"},
               {Direction::higher_is_better, Direction::lower_is_better});
  // d1: up a=3 b=2 c=1 ; down a=1 b=1 c=2
  t.set(0, 0, 0, 3); t.set(0, 1, 0, 2); t.set(0, 2, 0, 1);
  t.set(0, 0, 1, 1); t.set(0, 1, 1, 1); t.set(0, 2, 1, 2);
  // d2: up all equal ; down a=3 b=2 c=1
  t.set(1, 0, 0, 5); t.set(1, 1, 0, 5); t.set(1, 2, 0, 5);
  t.set(1, 0, 1, 3); t.set(1, 1, 1, 2); t.set(1, 2, 1, 1);
  const RankReport r = aggregate_ranks(t);
  CHECK(r.mean_rank[0][0] == doctest::Approx(1.5));
  CHECK(r.mean_rank[2][0] == doctest::Approx(2.5));
  CHECK(r.mean_rank[0][1] == doctest::Approx(2.25));
  CHECK(r.mean_rank[1][1] == doctest::Approx(1.75));
  CHECK(r.overall[0] == doctest::Approx((1.5 + 2.25) / 2));
}

TEST_CASE("rank aggregation names a missing cell") {
  ScoreTable t({"d1"}, {"a", "b"}, {"m"}, {Direction::higher_is_better});
  t.set(0, 0, 0, 1.0);
  CHECK_THROWS_WITH_AS(aggregate_ranks(t), doctest::Contains("b"), std::invalid_argument);
}

TEST_CASE("published scores reproduce the published aggregate ranks") {
  const RankReport r = aggregate_ranks(load_published_scores());
  const auto& expect = published_ranks();
  REQUIRE(r.models.size() == 7);
  for (std::size_t m = 0; m < 7; ++m) {
    for (std::size_t k = 0; k < 6; ++k) {
      if (tie_affected(m, k)) continue;
      INFO(r.models[m], " ", r.metrics[k]);
      CHECK(r.mean_rank[m][k] == doctest::Approx(expect[m][k]).epsilon(1e-9));
    }
    CHECK(std::abs(r.overall[m] - expect[m][6]) <= 0.05 + 1e-9);
  }
  // Ordering by aggregate rank: Geom, Topo, UMAP AE, UMAP, PCA, t-SNE, Vanilla.
  std::vector<std::size_t> order(7);
  for (std::size_t i = 0; i < 7; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return r.overall[a] < r.overall[b]; });
  CHECK(order == std::vector<std::size_t>{0, 2, 3, 4, 6, 5, 1});
}

TEST_CASE("reflection along a line keeps every neighbourhood") {
  Matrix x(12, 1);
  for (Eigen::Index i = 0; i < 12; ++i) x(i, 0) = std::pow(1.3, static_cast<double>(i));
  const Matrix z = -x;
  const std::vector<std::size_t> ks{1, 3, 5};
  CHECK(knn_recall(x, z, ks) == 1.0);
  CHECK(trustworthiness(x, z, ks) == 1.0);
}

TEST_CASE("stress of two points") {
  Matrix x(2, 1);
  x << 0, 1;
  Matrix z(2, 1);
  z << 0, 3;
  CHECK(stress(x, z) == 4.0);
}

TEST_CASE("spearman is rank based") {
  const Matrix x = gaussian(15, 3, 4);
  CHECK(spearman_distances(x, 2.5 * x) == doctest::Approx(1.0));
  Matrix a(3, 1);
  a << 0, 1, 3;  // distances 1, 3, 2
  Matrix b(3, 1);
  b << 0, 3, 1;  // distances 3, 1, 2
  CHECK(spearman_distances(a, b) == doctest::Approx(-1.0));
  CHECK_THROWS(spearman_distances(a, Matrix::Zero(3, 1)));
}

TEST_CASE("KL is non-negative and rejects a collapsed embedding") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix x = gaussian(12, 3, s);
    const Matrix z = gaussian(12, 2, s + 50);
    CHECK(kl_sigma(x, z, 0.1) >= 0.0);
    CHECK(kl_sigma(x, z, 100.0) >= 0.0);
  }
  const Matrix x = gaussian(5, 2, 1);
  CHECK_THROWS(kl_sigma(x, Matrix::Zero(5, 2), 0.1));
}

TEST_CASE("rank aggregation corner cases") {
  ScoreTable one({"d"}, {"only"}, {"m1", "m2"}, {Direction::higher_is_better, Direction::lower_is_better});
  one.set(0, 0, 0, 0.3);
  one.set(0, 0, 1, 7.0);
  CHECK(aggregate_ranks(one).overall[0] == 1.0);

  ScoreTable two({"d1", "d2"}, {"A", "B"}, {"up", "down"},
                 {Direction::higher_is_better, Direction::lower_is_better});
  for (std::size_t d = 0; d < 2; ++d) {
    two.set(d, 0, 0, 0.9);
    two.set(d, 1, 0, 0.5);
    two.set(d, 0, 1, 1.0);
    two.set(d, 1, 1, 2.0);
  }
  const RankReport r = aggregate_ranks(two);
  CHECK(r.overall[0] == 1.0);
  CHECK(r.overall[1] == 2.0);
}

TEST_CASE("MNIST KL_0.1 alone ranks Topo AE ahead of Vanilla AE") {
  const ScoreTable full = load_published_scores();
  ScoreTable mnist({"MNIST"}, {"Vanilla AE", "Topo AE"}, {"KL_0.1"}, {Direction::lower_is_better});
  mnist.set(0, 0, 0, *full.values[0][1][0]);
  mnist.set(0, 1, 0, *full.values[0][2][0]);
  CHECK(*full.values[0][2][0] == 0.094);
  CHECK(*full.values[0][1][0] == 0.133);
  const RankReport r = aggregate_ranks(mnist);
  CHECK(r.overall[1] < r.overall[0]);
}
