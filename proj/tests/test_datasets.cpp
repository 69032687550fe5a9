#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "geomae/datasets.hpp"
#include "geomae/errors.hpp"
#include "geomae/oracles.hpp"

using namespace geomae;

namespace {

std::string raster_text(const std::vector<std::string>& rows, double res) {
  std::string body;
  for (const auto& r : rows) body += (body.empty() ? "" : "\n") + r;
  std::ostringstream os;
  os << "# test raster\nresolution " << res << "\nchecksum " << std::hex << fnv1a64(body) << "\n";
  for (const auto& r : rows) os << r << "\n";
  return os.str();
}

LandRaster parse(const std::string& text) {
  std::istringstream in(text);
  return parse_land_raster(in);
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("tiny raster parses and looks up cells") {
  // 90 degree cells: 2 bands x 4 sectors.
  const LandRaster r = parse(raster_text({"1203", "0067"}, 90));
  CHECK(r.rows == 2);
  CHECK(r.cols == 4);
  CHECK(r.lookup(45, -135) == 1);
  CHECK(r.lookup(45, -45) == 2);
  CHECK(r.lookup(-45, 135) == 7);
  CHECK(r.lookup(90, -180) == 1);
  CHECK(r.lookup(-90, 180) == 0);  // wraps to the first sector
  CHECK(LandRaster::sampled(3));
  CHECK_FALSE(LandRaster::sampled(LandRaster::kOcean));
  CHECK_FALSE(LandRaster::sampled(LandRaster::kAntarctica));
}

TEST_CASE("raster format errors") {
  std::string bad = raster_text({"1203", "0067"}, 90);
  bad[bad.size() - 2] = '6';
  CHECK_THROWS_AS(parse(bad), FormatError);                                  // checksum
  CHECK_THROWS_AS(parse(raster_text({"1203", "006"}, 90)), FormatError);     // ragged
  CHECK_THROWS_AS(parse(raster_text({"12x3", "0067"}, 90)), FormatError);    // junk
  CHECK_THROWS_AS(parse(raster_text({"1203", "0068"}, 90)), FormatError);    // code 8
  CHECK_THROWS_AS(parse(raster_text({"1203"}, 90)), FormatError);            // too few rows
  CHECK_THROWS_AS(parse("checksum 0\n"), FormatError);
  CHECK_THROWS_AS(load_land_raster("/nonexistent/raster.txt"), IoError);
}

TEST_CASE("shipped raster is a valid 1 degree grid with every continent") {
  const LandRaster& r = default_land_raster();
  CHECK(r.rows == 180);
  CHECK(r.cols == 360);
  std::set<int> codes(r.codes.begin(), r.codes.end());
  for (int c = 0; c <= 7; ++c) CHECK(codes.count(c) == 1);
  CHECK(continent_names().size() == 8);
  // A few unambiguous cells.
  CHECK(r.lookup(0.5, -160.5) == LandRaster::kOcean);  // central Pacific
  CHECK(r.lookup(-85, 0) == LandRaster::kAntarctica);
  CHECK(r.lookup(9.5, 20.5) == 1);     // Chad
  CHECK(r.lookup(-10.5, -55.5) == 5);  // Brazil
}

TEST_CASE("earth samples are unit vectors on sampled land") {
  const LandRaster& r = default_land_raster();
  const EarthSample s = earth_generate(2000, 3, r);
  REQUIRE(s.frame.size() == 2000);
  CHECK(s.attempted >= 2000);
  for (Eigen::Index i = 0; i < s.frame.x.rows(); ++i) {
    CHECK(std::abs(s.frame.x.row(i).norm() - 1.0) <= 4e-16);
    const double lat = std::asin(std::clamp(s.frame.x(i, 2), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    const double lon = std::atan2(s.frame.x(i, 1), s.frame.x(i, 0)) * 180.0 / std::numbers::pi;
    CHECK(LandRaster::sampled(r.lookup(lat, lon)));
    CHECK(s.frame.labels[static_cast<std::size_t>(i)] == r.lookup(lat, lon));
  }
  const EarthSample again = earth_generate(2000, 3, r);
  CHECK(again.frame.x == s.frame.x);
  CHECK(again.attempted == s.attempted);
}

TEST_CASE("all-land raster accepts everything") {
  const std::vector<std::string> rows(2, "1111");
  const LandRaster r = parse(raster_text(rows, 90));
  const EarthSample s = earth_generate(500, 1, r);
  CHECK(s.acceptance_rate() == 1.0);
  CHECK(oracle::land_area_fraction(r) == doctest::Approx(1.0));
}

TEST_CASE("land fraction oracle on a hemisphere raster") {
  const LandRaster r = parse(raster_text({"2222", "0000"}, 90));
  CHECK(oracle::land_area_fraction(r) == doctest::Approx(0.5));
  const EarthSample s = earth_generate(20000, 9, r);
  CHECK(s.acceptance_rate() == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("toy manifolds have the requested size and labels") {
  for (ToyKind k : {ToyKind::swiss_roll, ToyKind::hemisphere, ToyKind::two_moons_3d}) {
    const EmbeddingFrame f = toy_manifold(k, 400, 2);
    CHECK(f.size() == 400);
    CHECK(f.x.cols() == 3);
    CHECK(f.labels.size() == 400);
    for (int l : f.labels) {
      CHECK(l >= 0);
      CHECK(static_cast<std::size_t>(l) < f.names.size());
    }
    CHECK(parse_toy_kind(to_string(k)) == k);
    CHECK(toy_manifold(k, 400, 2).x == f.x);
  }
  CHECK_THROWS_AS(parse_toy_kind("torus"), std::invalid_argument);
}

TEST_CASE("hemisphere points lie on the upper unit hemisphere") {
  const EmbeddingFrame f = toy_manifold(ToyKind::hemisphere, 300, 5);
  for (Eigen::Index i = 0; i < f.x.rows(); ++i) {
    CHECK(f.x.row(i).norm() == doctest::Approx(1.0));
    CHECK(f.x(i, 2) >= 0.0);
  }
}

TEST_CASE("swiss roll follows its parametrization") {
  const EmbeddingFrame f = toy_manifold(ToyKind::swiss_roll, 300, 5);
  for (Eigen::Index i = 0; i < f.x.rows(); ++i) {
    const double t = std::hypot(f.x(i, 1), f.x(i, 2));
    CHECK(t >= 1.5 * std::numbers::pi - 1e-9);
    CHECK(t <= 4.5 * std::numbers::pi + 1e-9);
    CHECK(f.x(i, 0) >= 0.0);
    CHECK(f.x(i, 0) <= 21.0);
  }
}

TEST_CASE("standardize gives zero mean, unit std and drops constants") {
  EmbeddingFrame f = toy_manifold(ToyKind::swiss_roll, 200, 1);
  Matrix x(200, 4);
  x.leftCols(3) = f.x;
  x.col(3).setConstant(2.0);
  f.x = x;
  std::vector<std::size_t> dropped;
  const EmbeddingFrame s = standardize(f, &dropped);
  CHECK(dropped == std::vector<std::size_t>{3});
  REQUIRE(s.x.cols() == 3);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = s.x.col(c).mean();
    const double var = (s.x.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0));
  }
  EmbeddingFrame constant;
  constant.x = Matrix::Ones(5, 2);
  constant.labels.assign(5, 0);
  CHECK_THROWS_AS(standardize(constant), std::invalid_argument);
}

TEST_CASE("csv round trip keeps every bit") {
  EmbeddingFrame f = toy_manifold(ToyKind::two_moons_3d, 50, 4);
  f.z = f.x.leftCols(2) * 0.1;
  std::stringstream ss;
  write_csv(ss, f);
  const EmbeddingFrame back = read_csv(ss);
  CHECK(back.x == f.x);
  REQUIRE(back.z.has_value());
  CHECK(*back.z == *f.z);
  CHECK(back.labels == f.labels);
}

TEST_CASE("csv reading rules") {
  std::istringstream plain("a,b\n1,2\n+3,4e-1\n");
  const EmbeddingFrame f = read_csv(plain);
  CHECK(f.x.rows() == 2);
  CHECK(f.x(1, 0) == 3.0);
  CHECK(f.x(1, 1) == 0.4);
  CHECK(f.labels == std::vector<int>{0, 0});
  CHECK_FALSE(f.z.has_value());

  std::istringstream bare_z("z,z0,label\n1,2,3\n");
  const EmbeddingFrame g = read_csv(bare_z);
  CHECK(g.x.cols() == 1);
  REQUIRE(g.z.has_value());
  CHECK(g.z->cols() == 1);
  CHECK(g.labels == std::vector<int>{3});

  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv(ragged), doctest::Contains("line 3"), FormatError);
  std::istringstream junk("a,b\n1,x\n");
  CHECK_THROWS_AS(read_csv(junk), FormatError);
  std::istringstream nan("a\nnan\n");
  CHECK_THROWS_AS(read_csv(nan), FormatError);
  std::istringstream frac("a,label\n1,0.5\n");
  CHECK_THROWS_AS(read_csv(frac), FormatError);
  CHECK_THROWS_AS(load_csv("/nonexistent/data.csv"), IoError);
}
