#pragma once

#include <span>
#include <string>

#include "geomae/datasets.hpp"
#include "geomae/diagnostics.hpp"

namespace geomae {

struct PlotStyle {
  double width = 640.0;
  double height = 560.0;
  double margin = 24.0;
  double point_radius = 2.0;
  std::string title;
};

// Colors used for label i (cycles after ten).
std::string category_color(int label);
// Diverging blue-white-red map; 0 is white, lo and hi are the saturated ends.
std::string diverging_color(double value, double lo, double hi);
inline constexpr const char* kInvalidColor = "#9a9a9a";

// Standalone SVG 1.1 documents. All of them read the 2D latents of `frame`
// and throw std::invalid_argument for an empty frame.
std::string scatter_svg(const EmbeddingFrame& frame, const PlotStyle& style = {});
std::string heatmap_svg(const EmbeddingFrame& frame, const HeatmapValues& heat,
                        const PlotStyle& style = {});
std::string indicatrix_svg(const EmbeddingFrame& frame, std::span<const Indicatrix> indicatrices,
                           const PlotStyle& style = {});

}  // namespace geomae
