#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mbaq/frame.hpp"
#include "mbaq/grid.hpp"

namespace mbaq {

inline constexpr int kNumLevels = 5;
inline constexpr int kMaxQp = 51;

struct EmphasisTag {};
struct QpTag {};
struct BitsTag {};

// Per-macroblock emphasis level in {0..4}; higher means better quality.
using EmphasisMap = Grid<int, EmphasisTag>;
// Per-macroblock QP in [0, 51].
using QpMap = Grid<int, QpTag>;
using MbBits = Grid<std::int64_t, BitsTag>;

// Emphasis level -> QP. Default 45/43/37/34/30: base QP 45, minimum 30.
struct EmphasisTable {
  std::array<int, kNumLevels> qp{45, 43, 37, 34, 30};

  void validate() const;
};

int emphasis_to_qp(int level, const EmphasisTable& table = {});
double qp_to_qstep(int qp);

using Block8 = std::array<double, 64>;
using QBlock8 = std::array<int, 64>;

// Orthonormal 2-D DCT-II on an 8x8 block (row-major) and its inverse.
Block8 dct8_forward(const Block8& block);
Block8 dct8_inverse(const Block8& coeffs);

// Zigzag scan position -> raster index.
const std::array<int, 64>& zigzag_order();

// Exp-Golomb code length for a non-negative integer.
constexpr int ue_bits(std::uint32_t k) {
  int n = 0;
  for (std::uint64_t v = static_cast<std::uint64_t>(k) + 1; v > 1; v >>= 1) ++n;
  return 2 * n + 1;
}

inline constexpr int kEobBits = 2;

// Run/level cost of one quantized 8x8 block in zigzag order, plus the
// end-of-block marker.
int estimate_bits(const QBlock8& qcoeffs);

struct EncodeResult {
  Frame recon;
  std::int64_t total_bits = 0;
  MbBits mb_bits;
};

// Intra-only simulator: four 8x8 DCT blocks per macroblock, uniform rounding
// quantizer with step qp_to_qstep(qp). Non-aligned frames are padded by edge
// replication and the reconstruction is cropped back.
EncodeResult encode_frame(const Frame& frame, const QpMap& qp_map);

QpMap apply_emphasis(const EmphasisMap& em, const EmphasisTable& table = {});
QpMap uniform_qp(const MbGrid& grid, int qp);
EmphasisMap uniform_emphasis(const MbGrid& grid, int level);
long long emphasis_sum(const EmphasisMap& em);

// Reconstruction and bits of every macroblock at each of a fixed set of QPs.
// Because blocks are coded independently, composing tiles reproduces
// encode_frame exactly for any map drawn from those QPs.
class LevelCache {
 public:
  LevelCache(const Frame& frame, const EmphasisTable& table = {});

  EncodeResult encode(const EmphasisMap& em) const;
  // Writes the reconstruction into `out` (padded geometry) without
  // allocating; returns total bits.
  std::int64_t compose(const EmphasisMap& em, Frame& padded_out) const;
  Frame crop_padded(const Frame& padded) const;

  const MbGrid& grid() const { return grid_; }
  std::int64_t mb_bits(int row, int col, int level) const {
    return bits_[level][static_cast<std::size_t>(row) * grid_.cols + col];
  }
  const Frame& padded_recon(int level) const { return recon_[level]; }

 private:
  int width_ = 0;
  int height_ = 0;
  MbGrid grid_;
  std::array<Frame, kNumLevels> recon_;
  std::array<std::vector<std::int64_t>, kNumLevels> bits_;
};

// One line per frame, row-major, space-separated decimal QPs.
void write_qp_matrix(const std::vector<QpMap>& maps, const std::filesystem::path& path);
// Each line is reshaped to rows x cols. Throws ParseError naming the frame
// index on a bad line.
std::vector<QpMap> read_qp_matrix(const std::filesystem::path& path, int rows, int cols);
std::vector<QpMap> parse_qp_matrix(std::string_view text, int rows, int cols);
std::string format_qp_matrix(const std::vector<QpMap>& maps);

}  // namespace mbaq
