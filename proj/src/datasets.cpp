#include "geomae/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geomae/errors.hpp"

#ifndef GEOMAE_DATA_DIR
#define GEOMAE_DATA_DIR "data"
#endif

namespace geomae {

void EmbeddingFrame::validate() const {
  if (labels.size() != size()) {
    throw ShapeError("frame has " + std::to_string(size()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (z && z->rows() != x.rows()) {
    throw ShapeError("frame has " + std::to_string(size()) + " inputs but " +
                     std::to_string(z->rows()) + " latents");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint8_t LandRaster::lookup(double lat_deg, double lon_deg) const {
  auto row = static_cast<long>(std::floor((90.0 - lat_deg) / resolution));
  auto col = static_cast<long>(std::floor((lon_deg + 180.0) / resolution));
  // The poles and the antimeridian fall on the last cell edge.
  row = std::clamp(row, 0L, static_cast<long>(rows) - 1);
  col = ((col % static_cast<long>(cols)) + static_cast<long>(cols)) % static_cast<long>(cols);
  return at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
}

void LandRaster::validate() const {
  if (!(resolution > 0.0)) throw FormatError("land raster: resolution must be positive");
  const double r = 180.0 / resolution;
  const double c = 360.0 / resolution;
  if (r != std::floor(r) || c != std::floor(c)) {
    throw FormatError("land raster: resolution must divide 180 degrees");
  }
  if (rows != static_cast<std::size_t>(r) || cols != static_cast<std::size_t>(c)) {
    throw FormatError("land raster: expected " + std::to_string(static_cast<std::size_t>(r)) + "x" +
                      std::to_string(static_cast<std::size_t>(c)) + " cells, got " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (codes.size() != rows * cols) throw FormatError("land raster: cell count mismatch");
  for (std::uint8_t code : codes) {
    if (code > kMaxCode) throw FormatError("land raster: code out of range");
  }
}

LandRaster parse_land_raster(std::istream& is) {
  LandRaster raster;
  std::optional<std::uint64_t> checksum;
  std::string body;
  std::string line;
  std::size_t lineno = 0;
  bool have_resolution = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("resolution ", 0) == 0) {
      try {
        raster.resolution = std::stod(line.substr(11));
      } catch (const std::exception&) {
        throw FormatError("land raster line " + std::to_string(lineno) + ": bad resolution");
      }
      have_resolution = true;
      continue;
    }
    if (line.rfind("checksum ", 0) == 0) {
      try {
        checksum = std::stoull(line.substr(9), nullptr, 16);
      } catch (const std::exception&) {
        throw FormatError("land raster line " + std::to_string(lineno) + ": bad checksum");
      }
      continue;
    }
    if (raster.cols == 0) raster.cols = line.size();
    if (line.size() != raster.cols) {
      throw FormatError("land raster line " + std::to_string(lineno) + ": expected " +
                        std::to_string(raster.cols) + " cells, got " + std::to_string(line.size()));
    }
    for (char ch : line) {
      if (ch < '0' || ch > '9') {
        throw FormatError("land raster line " + std::to_string(lineno) + ": bad cell '" +
                          std::string(1, ch) + "'");
      }
      raster.codes.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    if (!body.empty()) body += '\n';
    body += line;
    ++raster.rows;
  }
  if (!have_resolution) throw FormatError("land raster: missing resolution line");
  if (!checksum) throw FormatError("land raster: missing checksum line");
  if (fnv1a64(body) != *checksum) throw FormatError("land raster: checksum mismatch");
  raster.validate();
  return raster;
}

LandRaster load_land_raster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open land raster " + path.string());
  return parse_land_raster(in);
}

const LandRaster& default_land_raster() {
  static const LandRaster raster = [] {
    const char* dir = std::getenv("GEOMAE_DATA_DIR");
    const std::filesystem::path base = dir != nullptr ? dir : GEOMAE_DATA_DIR;
    return load_land_raster(base / "land_1deg.txt");
  }();
  return raster;
}

const std::vector<std::string>& continent_names() {
  static const std::vector<std::string> names = {
      "ocean", "africa", "asia", "europe+russia", "north america", "south america", "oceania", "antarctica"};
  return names;
}

EarthSample earth_generate(std::size_t n, std::uint64_t seed, const LandRaster& raster) {
  raster.validate();
  bool any_land = false;
  for (std::uint8_t code : raster.codes) any_land = any_land || LandRaster::sampled(code);
  if (!any_land) throw std::invalid_argument("earth_generate: raster has no usable land");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EarthSample out;
  out.frame.x.resize(static_cast<Eigen::Index>(n), 3);
  out.frame.labels.reserve(n);
  out.frame.names = continent_names();
  constexpr double deg = 180.0 / std::numbers::pi;
  std::size_t kept = 0;
  while (kept < n) {
    const double a = gauss(rng);
    const double b = gauss(rng);
    const double c = gauss(rng);
    const double r = std::sqrt(a * a + b * b + c * c);
    if (r == 0.0) continue;
    ++out.attempted;
    const double x = a / r;
    const double y = b / r;
    const double z = c / r;
    const std::uint8_t code = raster.lookup(std::asin(std::clamp(z, -1.0, 1.0)) * deg, std::atan2(y, x) * deg);
    if (!LandRaster::sampled(code)) continue;
    const auto row = static_cast<Eigen::Index>(kept);
    out.frame.x(row, 0) = x;
    out.frame.x(row, 1) = y;
    out.frame.x(row, 2) = z;
    out.frame.labels.push_back(code);
    ++kept;
  }
  return out;
}

ToyKind parse_toy_kind(const std::string& name) {
  if (name == "swiss_roll") return ToyKind::swiss_roll;
  if (name == "hemisphere") return ToyKind::hemisphere;
  if (name == "two_moons_3d") return ToyKind::two_moons_3d;
  throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

std::string to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::swiss_roll: return "swiss_roll";
    case ToyKind::hemisphere: return "hemisphere";
    case ToyKind::two_moons_3d: return "two_moons_3d";
  }
  return "?";
}

EmbeddingFrame toy_manifold(ToyKind kind, std::size_t n, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EmbeddingFrame f;
  f.x.resize(static_cast<Eigen::Index>(n), 3);
  f.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    switch (kind) {
      case ToyKind::swiss_roll: {
        const double t = 1.5 * pi + 3.0 * pi * unit(rng);
        const double h = 21.0 * unit(rng);
        f.x(r, 0) = h;
        f.x(r, 1) = t * std::sin(t);
        f.x(r, 2) = t * std::cos(t);
        f.labels[i] = std::min(5, static_cast<int>((t - 1.5 * pi) / (0.5 * pi)));
        break;
      }
      case ToyKind::hemisphere: {
        double a = 0.0;
        double b = 0.0;
        double c = 0.0;
        double len = 0.0;
        while (len == 0.0) {
          a = gauss(rng);
          b = gauss(rng);
          c = gauss(rng);
          len = std::sqrt(a * a + b * b + c * c);
        }
        f.x(r, 0) = a / len;
        f.x(r, 1) = b / len;
        f.x(r, 2) = std::abs(c) / len;
        const double phi = std::atan2(b, a) + pi;
        f.labels[i] = std::min(5, static_cast<int>(phi / (pi / 3.0)));
        break;
      }
      case ToyKind::two_moons_3d: {
        const int moon = unit(rng) < 0.5 ? 0 : 1;
        const double s = pi * unit(rng);
        double x = moon == 0 ? std::cos(s) : 1.0 - std::cos(s);
        double y = moon == 0 ? std::sin(s) : 0.5 - std::sin(s);
        double z = 0.5 * std::sin(2.0 * s);
        f.x(r, 0) = x + 0.05 * gauss(rng);
        f.x(r, 1) = y + 0.05 * gauss(rng);
        f.x(r, 2) = z + 0.05 * gauss(rng);
        f.labels[i] = moon;
        break;
      }
    }
  }
  switch (kind) {
    case ToyKind::swiss_roll:
      for (int k = 0; k < 6; ++k) f.names.push_back("turn " + std::to_string(k));
      break;
    case ToyKind::hemisphere:
      for (int k = 0; k < 6; ++k) f.names.push_back("sector " + std::to_string(k));
      break;
    case ToyKind::two_moons_3d:
      f.names = {"upper", "lower"};
      break;
  }
  return f;
}

EmbeddingFrame standardize(const EmbeddingFrame& frame, std::vector<std::size_t>* dropped) {
  frame.validate();
  const Eigen::Index m = frame.x.rows();
  if (m == 0) throw std::invalid_argument("standardize: empty frame");
  std::vector<Eigen::Index> keep;
  std::vector<double> means;
  std::vector<double> sds;
  if (dropped != nullptr) dropped->clear();
  for (Eigen::Index c = 0; c < frame.x.cols(); ++c) {
    const double mu = frame.x.col(c).mean();
    const double var = (frame.x.col(c).array() - mu).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 0.0 && std::isfinite(sd)) {
      keep.push_back(c);
      means.push_back(mu);
      sds.push_back(sd);
    } else if (dropped != nullptr) {
      dropped->push_back(static_cast<std::size_t>(c));
    }
  }
  if (keep.empty()) throw std::invalid_argument("standardize: every feature is constant");
  EmbeddingFrame out = frame;
  out.x.resize(m, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) =
        (frame.x.col(keep[k]).array() - means[k]) / sds[k];
  }
  return out;
}

}  // namespace geomae
