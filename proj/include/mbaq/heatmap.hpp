#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mbaq/io.hpp"

namespace mbaq {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr int kHeatmapTile = 16;
inline constexpr int kLegendGap = 2;
inline constexpr int kLegendHeight = 8;

// t = 0 is blue (coarsest), t = 1 is red (finest).
Rgb ramp_color(double t);

// 16x16 tile per macroblock; emphasis maps use five steps, QP maps a
// continuous ramp over [qp_finest, qp_coarsest]. A legend strip sits under
// the body after a black gap.
RgbImage render_heatmap(const MapFile& map, int qp_finest = 30, int qp_coarsest = 45);

void write_ppm(const RgbImage& image, const std::filesystem::path& path);

}  // namespace mbaq
