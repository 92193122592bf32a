#include "mbaq/codec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace mbaq {

void EmphasisTable::validate() const {
  for (int i = 0; i < kNumLevels; ++i) {
    if (qp[i] < 0 || qp[i] > kMaxQp) throw InvalidConfig("emphasis table QP out of [0,51]");
    if (i > 0 && qp[i] > qp[i - 1]) {
      throw InvalidConfig("emphasis table must not raise QP with level");
    }
  }
}

int emphasis_to_qp(int level, const EmphasisTable& table) {
  if (level < 0 || level >= kNumLevels) {
    throw InvalidInput("emphasis level " + std::to_string(level) + " outside [0,4]");
  }
  return table.qp[level];
}

double qp_to_qstep(int qp) {
  if (qp < 0 || qp > kMaxQp) throw InvalidInput("QP " + std::to_string(qp) + " outside [0,51]");
  return std::exp2((qp - 4) / 6.0);
}

namespace {

struct DctBasis {
  // basis[k][n] = a(k) cos(pi (2n+1) k / 16)
  std::array<std::array<double, 8>, 8> m{};
  DctBasis() {
    for (int k = 0; k < 8; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n) {
        m[k][n] = a * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0);
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

}  // namespace

Block8 dct8_forward(const Block8& block) {
  const auto& m = basis().m;
  Block8 tmp{};
  // rows: tmp[r][k] = sum_n m[k][n] x[r][n]
  for (int r = 0; r < 8; ++r) {
    for (int k = 0; k < 8; ++k) {
      double s = 0.0;
      for (int n = 0; n < 8; ++n) s += m[k][n] * block[r * 8 + n];
      tmp[r * 8 + k] = s;
    }
  }
  Block8 out{};
  for (int c = 0; c < 8; ++c) {
    for (int k = 0; k < 8; ++k) {
      double s = 0.0;
      for (int n = 0; n < 8; ++n) s += m[k][n] * tmp[n * 8 + c];
      out[k * 8 + c] = s;
    }
  }
  return out;
}

Block8 dct8_inverse(const Block8& coeffs) {
  const auto& m = basis().m;
  Block8 tmp{};
  for (int c = 0; c < 8; ++c) {
    for (int n = 0; n < 8; ++n) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += m[k][n] * coeffs[k * 8 + c];
      tmp[n * 8 + c] = s;
    }
  }
  Block8 out{};
  for (int r = 0; r < 8; ++r) {
    for (int n = 0; n < 8; ++n) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += m[k][n] * tmp[r * 8 + k];
      out[r * 8 + n] = s;
    }
  }
  return out;
}

const std::array<int, 64>& zigzag_order() {
  static const std::array<int, 64> order = [] {
    std::array<int, 64> z{};
    int i = 0;
    for (int d = 0; d < 15; ++d) {
      const int lo = std::max(0, d - 7);
      const int hi = std::min(d, 7);
      for (int t = lo; t <= hi; ++t) {
        // odd diagonals run top-right to bottom-left
        const int row = (d % 2 == 0) ? d - t : t;
        const int col = d - row;
        z[i++] = row * 8 + col;
      }
    }
    return z;
  }();
  return order;
}

int estimate_bits(const QBlock8& qcoeffs) {
  int bits = 0;
  std::uint32_t run = 0;
  for (int idx : zigzag_order()) {
    const int level = qcoeffs[idx];
    if (level == 0) {
      ++run;
      continue;
    }
    bits += ue_bits(run) + ue_bits(static_cast<std::uint32_t>(std::abs(level))) + 1;
    run = 0;
  }
  return bits + kEobBits;
}

namespace {

// Codes one 16x16 macroblock of `src` (padded geometry) into `dst`.
std::int64_t code_macroblock(const Frame& src, Frame& dst, int mb_row, int mb_col, double qstep) {
  std::int64_t bits = 0;
  for (int sub = 0; sub < 4; ++sub) {
    const int x0 = mb_col * kMbSize + (sub % 2) * 8;
    const int y0 = mb_row * kMbSize + (sub / 2) * 8;
    Block8 block{};
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) block[y * 8 + x] = src.at(x0 + x, y0 + y) - 128.0;
    }
    const Block8 coeffs = dct8_forward(block);
    QBlock8 q{};
    Block8 dq{};
    for (int i = 0; i < 64; ++i) {
      // std::round breaks ties away from zero
      q[i] = static_cast<int>(std::round(coeffs[i] / qstep));
      dq[i] = q[i] * qstep;
    }
    bits += estimate_bits(q);
    const Block8 rec = dct8_inverse(dq);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const double v = std::round(rec[y * 8 + x] + 128.0);
        dst.at(x0 + x, y0 + y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return bits;
}

}  // namespace

EncodeResult encode_frame(const Frame& frame, const QpMap& qp_map) {
  const MbGrid grid = partition(frame);
  if (qp_map.rows() != static_cast<std::size_t>(grid.rows) ||
      qp_map.cols() != static_cast<std::size_t>(grid.cols)) {
    throw InvalidInput("QP map shape does not match the frame's macroblock grid");
  }
  for (int qp : qp_map) {
    if (qp < 0 || qp > kMaxQp) throw InvalidInput("QP map entry outside [0,51]");
  }
  const Frame padded = pad_to_macroblocks(frame);
  Frame recon(padded.width(), padded.height());
  EncodeResult result;
  result.mb_bits = MbBits(grid.rows, grid.cols, 0);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const std::int64_t bits = code_macroblock(padded, recon, r, c, qp_to_qstep(qp_map(r, c)));
      result.mb_bits(r, c) = bits;
      result.total_bits += bits;
    }
  }
  result.recon = crop(recon, frame.width(), frame.height());
  return result;
}

QpMap apply_emphasis(const EmphasisMap& em, const EmphasisTable& table) {
  QpMap qp(em.rows(), em.cols());
  for (std::size_t i = 0; i < em.size(); ++i) qp[i] = emphasis_to_qp(em[i], table);
  return qp;
}

QpMap uniform_qp(const MbGrid& grid, int qp) {
  if (qp < 0 || qp > kMaxQp) throw InvalidInput("QP outside [0,51]");
  return QpMap(grid.rows, grid.cols, qp);
}

EmphasisMap uniform_emphasis(const MbGrid& grid, int level) {
  if (level < 0 || level >= kNumLevels) throw InvalidInput("emphasis level outside [0,4]");
  return EmphasisMap(grid.rows, grid.cols, level);
}

long long emphasis_sum(const EmphasisMap& em) {
  long long s = 0;
  for (int v : em) s += v;
  return s;
}

LevelCache::LevelCache(const Frame& frame, const EmphasisTable& table)
    : width_(frame.width()), height_(frame.height()), grid_(partition(frame)) {
  table.validate();
  const Frame padded = pad_to_macroblocks(frame);
  for (int level = 0; level < kNumLevels; ++level) {
    recon_[level] = Frame(padded.width(), padded.height());
    bits_[level].resize(static_cast<std::size_t>(grid_.count()));
    const double qstep = qp_to_qstep(table.qp[level]);
    for (int r = 0; r < grid_.rows; ++r) {
      for (int c = 0; c < grid_.cols; ++c) {
        bits_[level][static_cast<std::size_t>(r) * grid_.cols + c] =
            code_macroblock(padded, recon_[level], r, c, qstep);
      }
    }
  }
}

std::int64_t LevelCache::compose(const EmphasisMap& em, Frame& padded_out) const {
  if (em.rows() != static_cast<std::size_t>(grid_.rows) ||
      em.cols() != static_cast<std::size_t>(grid_.cols)) {
    throw InvalidInput("emphasis map shape does not match the cached frame");
  }
  const int pw = grid_.padded_width();
  if (padded_out.width() != pw || padded_out.height() != grid_.padded_height()) {
    padded_out = Frame(pw, grid_.padded_height());
  }
  std::int64_t total = 0;
  for (int r = 0; r < grid_.rows; ++r) {
    for (int c = 0; c < grid_.cols; ++c) {
      const int level = em(r, c);
      if (level < 0 || level >= kNumLevels) throw InvalidInput("emphasis level outside [0,4]");
      total += mb_bits(r, c, level);
      const auto src = recon_[level].luma();
      auto dst = padded_out.luma();
      for (int y = 0; y < kMbSize; ++y) {
        const std::size_t off = static_cast<std::size_t>(r * kMbSize + y) * pw + c * kMbSize;
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(off), kMbSize,
                    dst.begin() + static_cast<std::ptrdiff_t>(off));
      }
    }
  }
  return total;
}

Frame LevelCache::crop_padded(const Frame& padded) const { return crop(padded, width_, height_); }

EncodeResult LevelCache::encode(const EmphasisMap& em) const {
  EncodeResult result;
  Frame padded;
  result.total_bits = compose(em, padded);
  result.mb_bits = MbBits(grid_.rows, grid_.cols, 0);
  for (int r = 0; r < grid_.rows; ++r) {
    for (int c = 0; c < grid_.cols; ++c) result.mb_bits(r, c) = mb_bits(r, c, em(r, c));
  }
  result.recon = crop_padded(padded);
  return result;
}

std::string format_qp_matrix(const std::vector<QpMap>& maps) {
  std::string out;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (k > 0 && !maps[k].same_shape(maps[0])) {
      throw InvalidInput("QP maps in one matrix file must share a shape");
    }
    bool first = true;
    for (int qp : maps[k]) {
      if (!first) out += ' ';
      out += std::to_string(qp);
      first = false;
    }
    out += '\n';
  }
  return out;
}

void write_qp_matrix(const std::vector<QpMap>& maps, const std::filesystem::path& path) {
  const std::string text = format_qp_matrix(maps);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<QpMap> parse_qp_matrix(std::string_view text, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw InvalidInput("QP matrix shape must be positive");
  std::vector<QpMap> maps;
  const std::size_t expected = static_cast<std::size_t>(rows) * cols;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    const std::size_t frame_index = maps.size();
    std::vector<int> values;
    values.reserve(expected);
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\r' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      int v = 0;
      const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), v);
      if (ec != std::errc{} || v < 0 || v > kMaxQp) {
        throw ParseError("QP matrix frame " + std::to_string(frame_index) + ": bad QP value");
      }
      values.push_back(v);
      i = static_cast<std::size_t>(ptr - line.data());
    }
    if (values.size() != expected) {
      throw ParseError("QP matrix frame " + std::to_string(frame_index) + ": expected " +
                       std::to_string(expected) + " values, found " +
                       std::to_string(values.size()));
    }
    maps.emplace_back(rows, cols, std::move(values));
  }
  return maps;
}

std::vector<QpMap> read_qp_matrix(const std::filesystem::path& path, int rows, int cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_qp_matrix(ss.str(), rows, cols);
}

}  // namespace mbaq
