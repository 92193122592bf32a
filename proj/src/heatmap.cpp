#include "mbaq/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mbaq {

Rgb ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto ch = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * v)); };
  // bump in green keeps the midpoint from turning muddy purple
  return Rgb{ch(t), ch(0.5 * (1.0 - std::abs(2.0 * t - 1.0))), ch(1.0 - t)};
}

RgbImage render_heatmap(const MapFile& map, int qp_finest, int qp_coarsest) {
  if (qp_finest >= qp_coarsest) throw InvalidInput("heatmap: QP range is empty");
  const std::size_t rows = map.is_emphasis ? map.emphasis.rows() : map.qp.rows();
  const std::size_t cols = map.is_emphasis ? map.emphasis.cols() : map.qp.cols();
  if (rows == 0 || cols == 0) throw ParseError("heatmap: empty map");

  auto value_t = [&](std::size_t i) {
    if (map.is_emphasis) return static_cast<double>(map.emphasis[i]) / (kNumLevels - 1);
    return static_cast<double>(qp_coarsest - map.qp[i]) / (qp_coarsest - qp_finest);
  };

  RgbImage img;
  img.width = static_cast<int>(cols) * kHeatmapTile;
  const int body = static_cast<int>(rows) * kHeatmapTile;
  img.height = body + kLegendGap + kLegendHeight;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, Rgb{});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Rgb color = ramp_color(value_t(r * cols + c));
      for (int y = 0; y < kHeatmapTile; ++y) {
        for (int x = 0; x < kHeatmapTile; ++x) {
          img.at(static_cast<int>(c) * kHeatmapTile + x, static_cast<int>(r) * kHeatmapTile + y) = color;
        }
      }
    }
  }
  for (int x = 0; x < img.width; ++x) {
    double t = (x + 0.5) / img.width;
    if (map.is_emphasis) {
      t = std::min(static_cast<int>(t * kNumLevels), kNumLevels - 1) / double(kNumLevels - 1);
    }
    const Rgb color = ramp_color(t);
    for (int y = body + kLegendGap; y < img.height; ++y) img.at(x, y) = color;
  }
  return img;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (const Rgb& p : image.pixels) {
    const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(px, 3);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mbaq
