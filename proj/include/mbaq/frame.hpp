#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mbaq/grid.hpp"

namespace mbaq {

inline constexpr int kMbSize = 16;

// Single-channel 8-bit image, row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::uint8_t fill = 0);
  Frame(int width, int height, std::vector<std::uint8_t> luma);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return luma_.empty(); }

  std::uint8_t& at(int x, int y) { return luma_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int x, int y) const { return luma_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> luma() const { return luma_; }
  std::span<std::uint8_t> luma() { return luma_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> luma_;
};

struct MbGrid {
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  int padded_width() const { return cols * kMbSize; }
  int padded_height() const { return rows * kMbSize; }
  friend bool operator==(const MbGrid&, const MbGrid&) = default;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }   // exclusive
  int bottom() const { return y + h; }  // exclusive
  long long area() const { return static_cast<long long>(w) * h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Region : std::uint8_t { kBackground = 0, kRoi = 1 };

struct RegionTag {};
using RegionMap = Grid<Region, RegionTag>;

// Rows = ceil(height/16), cols = ceil(width/16). Throws InvalidInput on a
// zero dimension.
MbGrid partition(const Frame& frame);
MbGrid partition(int width, int height);

// Extends the frame to whole macroblocks by replicating the last row and
// column. Frames already aligned are returned unchanged.
Frame pad_to_macroblocks(const Frame& frame);

// Top-left corner crop.
Frame crop(const Frame& frame, int width, int height);

// RoI iff the macroblock's 16x16 footprint intersects any box.
RegionMap classify_regions(const MbGrid& grid, const std::vector<BoundingBox>& boxes);

Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

}  // namespace mbaq
