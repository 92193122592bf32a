#include "mbaq/quality.hpp"

#include <array>
#include <cmath>

namespace mbaq {

double ssim_block(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidInput("SSIM blocks must be equal and non-empty");
  // Integer accumulation keeps the statistics exact for 8-bit input.
  std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::int64_t a = x[i];
    const std::int64_t b = y[i];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const double n = static_cast<double>(x.size());
  const double mx = sx / n;
  const double my = sy / n;
  const double vx = (static_cast<double>(sxx) * n - static_cast<double>(sx) * sx) / (n * n);
  const double vy = (static_cast<double>(syy) * n - static_cast<double>(sy) * sy) / (n * n);
  const double cxy = (static_cast<double>(sxy) * n - static_cast<double>(sx) * sy) / (n * n);
  return ((2.0 * mx * my + kSsimC1) * (2.0 * cxy + kSsimC2)) /
         ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
}

MbSsimGrid per_mb_ssim(const Frame& raw, const Frame& other) {
  if (raw.width() != other.width() || raw.height() != other.height()) {
    throw InvalidInput("SSIM frames differ in dimensions");
  }
  const MbGrid grid = partition(raw);
  const Frame a = pad_to_macroblocks(raw);
  const Frame b = pad_to_macroblocks(other);
  MbSsimGrid out(grid.rows, grid.cols, 0.0);
  std::array<std::uint8_t, kMbSize * kMbSize> ta{}, tb{};
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      for (int y = 0; y < kMbSize; ++y) {
        for (int x = 0; x < kMbSize; ++x) {
          ta[y * kMbSize + x] = a.at(c * kMbSize + x, r * kMbSize + y);
          tb[y * kMbSize + x] = b.at(c * kMbSize + x, r * kMbSize + y);
        }
      }
      out(r, c) = ssim_block(ta, tb);
    }
  }
  return out;
}

double mean(const MbSsimGrid& grid) {
  if (grid.empty()) return 0.0;
  double s = 0.0;
  for (double v : grid) s += v;
  return s / static_cast<double>(grid.size());
}

double psnr(const Frame& raw, const Frame& recon) {
  if (raw.width() != recon.width() || raw.height() != recon.height()) {
    throw InvalidInput("PSNR frames differ in dimensions");
  }
  std::int64_t sse = 0;
  const auto a = raw.luma();
  const auto b = recon.luma();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
    sse += d * d;
  }
  if (sse == 0) return kPsnrCapDb;
  const double mse = static_cast<double>(sse) / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace mbaq
