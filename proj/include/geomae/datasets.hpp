#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geomae/tensor.hpp"

namespace geomae {

// Inputs X [m x n], optional latents Z [m x l] and one integer label per row.
struct EmbeddingFrame {
  Matrix x;
  std::optional<Matrix> z;
  std::vector<int> labels;
  std::vector<std::string> names;  // legend, indexed by label

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  // Throws ShapeError if row counts disagree.
  void validate() const;
};

// Continent codes on a regular lat/lon grid, first row at the north pole.
struct LandRaster {
  double resolution = 1.0;  // degrees per cell
  std::size_t rows = 0;     // 180 / resolution
  std::size_t cols = 0;     // 360 / resolution
  std::vector<std::uint8_t> codes;

  static constexpr std::uint8_t kOcean = 0;
  static constexpr std::uint8_t kAntarctica = 7;
  static constexpr std::uint8_t kMaxCode = 7;

  std::uint8_t at(std::size_t row, std::size_t col) const { return codes[row * cols + col]; }
  // Cell containing the point; latitude in [-90, 90], longitude in [-180, 180].
  std::uint8_t lookup(double lat_deg, double lon_deg) const;
  // Usable for sampling: land and not Antarctica.
  static bool sampled(std::uint8_t code) { return code != kOcean && code != kAntarctica; }
  void validate() const;
};

// Text format: '#' comment lines, "resolution <deg>", "checksum <fnv1a64 hex>",
// then one line of digits per latitude band (north first). The checksum
// covers the digit rows joined by '\n'.
LandRaster parse_land_raster(std::istream& is);
LandRaster load_land_raster(const std::filesystem::path& path);
// The 1-degree raster shipped in data/.
const LandRaster& default_land_raster();
std::uint64_t fnv1a64(std::string_view bytes);

// Continent names indexed by code.
const std::vector<std::string>& continent_names();

struct EarthSample {
  EmbeddingFrame frame;
  std::size_t attempted = 0;
  double acceptance_rate() const {
    return attempted == 0 ? 0.0 : static_cast<double>(frame.size()) / static_cast<double>(attempted);
  }
};

// Uniform points on the unit sphere (normalized Gaussians) kept where the
// raster cell is land other than Antarctica, labeled by continent code.
EarthSample earth_generate(std::size_t n, std::uint64_t seed, const LandRaster& raster);

enum class ToyKind { swiss_roll, hemisphere, two_moons_3d };
ToyKind parse_toy_kind(const std::string& name);
std::string to_string(ToyKind kind);

// Parametric generators, see docs/datasets.md.
EmbeddingFrame toy_manifold(ToyKind kind, std::size_t n, std::uint64_t seed);

// Column-wise (x - mean) / std with the population std. Constant columns are
// dropped (their indices are reported through `dropped`). Throws
// std::invalid_argument if every column is constant.
EmbeddingFrame standardize(const EmbeddingFrame& frame, std::vector<std::size_t>* dropped = nullptr);

// CSV layout: header row; the column named `label_column` (if present) holds
// integer labels; columns whose name starts with `latent_prefix` followed by
// digits hold Z; everything else is X.
struct CsvSchema {
  std::string label_column = "label";
  std::string latent_prefix = "z";
};

EmbeddingFrame read_csv(std::istream& is, const CsvSchema& schema = {});
EmbeddingFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
// Writes x0..x{n-1}, z0..z{l-1} and label, numbers at 17 significant digits.
void write_csv(std::ostream& os, const EmbeddingFrame& frame);
void save_csv(const std::filesystem::path& path, const EmbeddingFrame& frame);

}  // namespace geomae
