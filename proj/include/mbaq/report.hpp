#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbaq/io.hpp"
#include "mbaq/rer.hpp"

namespace mbaq {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kFramesPerSecond = 30.0;

struct SweepRow {
  std::size_t scene_id = 0;
  int frame = 0;
  std::string method;
  std::int64_t bits = 0;
  double acc_r = 0.0;
  double acc_c = 0.0;
  bool feasible = false;
  double mean_ssim = 0.0;
  double psnr = 0.0;
  // Only defined for methods that produce emphasis maps.
  std::optional<long long> emphasis_sum;
};

struct MethodAggregate {
  std::string method;
  int frames = 0;
  std::int64_t total_bits = 0;
  double mean_bits = 0.0;
  // total_bits * 30 / frames, every frame intra coded
  double bitrate_bps = 0.0;
  double mean_acc_r = 0.0;
  double mean_acc_c = 0.0;
  double mean_abs_dacc = 0.0;
  double feasible_fraction = 0.0;
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
};

// One aggregate per method, in order of first appearance.
std::vector<MethodAggregate> aggregate_rows(const std::vector<SweepRow>& rows);

// Per-frame rows followed by one aggregate row per method.
std::string format_sweep_csv(const std::vector<SweepRow>& rows,
                             const std::vector<MethodAggregate>& aggregates);

Json aggregate_to_json(const MethodAggregate& agg);

std::string format_epoch_log_csv(const std::vector<EpochLog>& log);

}  // namespace mbaq
