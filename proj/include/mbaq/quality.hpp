#pragma once

#include <cstdint>
#include <span>

#include "mbaq/frame.hpp"
#include "mbaq/grid.hpp"

namespace mbaq {

struct SsimTag {};
using MbSsimGrid = Grid<double, SsimTag>;

inline constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);
inline constexpr double kPsnrCapDb = 99.0;

// Single-window SSIM over two equally sized sample sets, population
// statistics.
double ssim_block(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y);

// SSIM of every aligned 16x16 macroblock (padded geometry).
MbSsimGrid per_mb_ssim(const Frame& raw, const Frame& other);

double mean(const MbSsimGrid& grid);

// 10 log10(255^2 / MSE), capped at kPsnrCapDb for identical frames.
double psnr(const Frame& raw, const Frame& recon);

}  // namespace mbaq
