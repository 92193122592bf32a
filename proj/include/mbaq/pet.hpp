#pragma once

#include <span>

#include "mbaq/codec.hpp"
#include "mbaq/quality.hpp"

namespace mbaq {

struct PetThresholds {
  double t_roi = 0.0;
  double t_bg = 0.0;
  double pct_roi = 0.9;
  double pct_bg = 0.5;
};

// Reconstruction at emphasis 0 everywhere (QP 45 with the default table).
Frame lowest_quality_encode(const Frame& frame, const EmphasisTable& table = {});

// Nearest-rank order statistic on the ascending sort: D[round(q (N-1))].
double percentile_threshold(std::span<const double> sorted_ascending, double q);

// SSIM percentile thresholds over every macroblock of (raw, low).
PetThresholds proxy_emphasis_threshold(const Frame& raw, const Frame& low, double pct_roi = 0.9,
                                       double pct_bg = 0.5);
PetThresholds proxy_emphasis_threshold(const MbSsimGrid& ssim_low, double pct_roi = 0.9,
                                       double pct_bg = 0.5);

}  // namespace mbaq
