#include "mbaq/frame.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

namespace mbaq {

Frame::Frame(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidInput("negative frame dimension");
  luma_.assign(static_cast<std::size_t>(width) * height, fill);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> luma)
    : width_(width), height_(height), luma_(std::move(luma)) {
  if (width < 0 || height < 0) throw InvalidInput("negative frame dimension");
  if (luma_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInput("luma length does not match width*height");
  }
}

MbGrid partition(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidInput("degenerate frame: zero dimension");
  }
  return MbGrid{(height + kMbSize - 1) / kMbSize, (width + kMbSize - 1) / kMbSize};
}

MbGrid partition(const Frame& frame) { return partition(frame.width(), frame.height()); }

Frame pad_to_macroblocks(const Frame& frame) {
  const MbGrid grid = partition(frame);
  const int pw = grid.padded_width();
  const int ph = grid.padded_height();
  if (pw == frame.width() && ph == frame.height()) return frame;

  Frame out(pw, ph);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, frame.height() - 1);
    for (int x = 0; x < pw; ++x) {
      out.at(x, y) = frame.at(std::min(x, frame.width() - 1), sy);
    }
  }
  return out;
}

Frame crop(const Frame& frame, int width, int height) {
  if (width > frame.width() || height > frame.height()) {
    throw InvalidInput("crop larger than source frame");
  }
  if (width == frame.width() && height == frame.height()) return frame;
  Frame out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(frame.luma().begin() + static_cast<std::ptrdiff_t>(y) * frame.width(), width,
                out.luma().begin() + static_cast<std::ptrdiff_t>(y) * width);
  }
  return out;
}

RegionMap classify_regions(const MbGrid& grid, const std::vector<BoundingBox>& boxes) {
  RegionMap regions(grid.rows, grid.cols, Region::kBackground);
  for (const BoundingBox& b : boxes) {
    if (b.w <= 0 || b.h <= 0) continue;
    const int r0 = std::max(0, b.y / kMbSize);
    const int c0 = std::max(0, b.x / kMbSize);
    const int r1 = std::min(grid.rows - 1, (b.bottom() - 1) / kMbSize);
    const int c1 = std::min(grid.cols - 1, (b.right() - 1) / kMbSize);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) regions(r, c) = Region::kRoi;
    }
  }
  return regions;
}

namespace {

// Skips whitespace and '#' comments between PGM header tokens.
std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in) != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  if (maxval != 255) throw ParseError(path.string() + ": only 8-bit PGM is supported");
  if (width <= 0 || height <= 0) throw ParseError(path.string() + ": bad PGM dimensions");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw ParseError(path.string() + ": truncated PGM payload");
  }
  return Frame(width, height, std::move(data));
}

void write_pgm(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.luma().data()),
            static_cast<std::streamsize>(frame.luma().size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mbaq
