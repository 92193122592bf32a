#include "mbaq/pet.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mbaq {

Frame lowest_quality_encode(const Frame& frame, const EmphasisTable& table) {
  return encode_frame(frame, apply_emphasis(uniform_emphasis(partition(frame), 0), table)).recon;
}

double percentile_threshold(std::span<const double> sorted_ascending, double q) {
  if (sorted_ascending.empty()) throw InvalidInput("percentile of an empty distribution");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("percentile outside [0,1]");
  const auto n = static_cast<double>(sorted_ascending.size() - 1);
  return sorted_ascending[static_cast<std::size_t>(std::lround(q * n))];
}

PetThresholds proxy_emphasis_threshold(const MbSsimGrid& ssim_low, double pct_roi, double pct_bg) {
  if (ssim_low.empty()) throw InvalidInput("PET on an empty macroblock grid");
  std::vector<double> d(ssim_low.begin(), ssim_low.end());
  std::sort(d.begin(), d.end());
  return PetThresholds{percentile_threshold(d, pct_roi), percentile_threshold(d, pct_bg), pct_roi,
                       pct_bg};
}

PetThresholds proxy_emphasis_threshold(const Frame& raw, const Frame& low, double pct_roi,
                                       double pct_bg) {
  return proxy_emphasis_threshold(per_mb_ssim(raw, low), pct_roi, pct_bg);
}

}  // namespace mbaq
