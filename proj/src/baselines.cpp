#include "mbaq/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace mbaq {

const char* method_tag(Method m) {
  switch (m) {
    case Method::kEmphasis: return "emphasis";
    case Method::kUniform: return "uniform";
    case Method::kBinaryRoi: return "binary_roi";
    case Method::kVarianceAq: return "variance_aq";
  }
  return "unknown";
}

Method parse_method(const std::string& tag) {
  for (Method m : {Method::kEmphasis, Method::kUniform, Method::kBinaryRoi, Method::kVarianceAq}) {
    if (tag == method_tag(m)) return m;
  }
  throw InvalidInput("unknown method tag: " + tag);
}

BaselineResult evaluate_qp_map(Method method, const QpMap& qp_map, const Scene& scene,
                               const AccuracyOracle& oracle, double tau) {
  EncodeResult enc = encode_frame(scene.frame, qp_map);
  BaselineResult out;
  out.method = method;
  out.qp_map = qp_map;
  out.bits = enc.total_bits;
  out.acc_r = oracle.score_in(scene, scene.frame);
  out.acc_c = oracle.score_in(scene, enc.recon);
  out.feasible = std::abs(out.acc_c - out.acc_r) <= tau;
  out.recon = std::move(enc.recon);
  return out;
}

BaselineResult uniform_qp_search(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                 const EmphasisTable& table) {
  const MbGrid grid = partition(scene.frame);
  BaselineResult last;
  for (int level = 0; level < kNumLevels; ++level) {
    last = evaluate_qp_map(Method::kUniform, uniform_qp(grid, table.qp[level]), scene, oracle, tau);
    if (last.feasible) return last;
  }
  return last;
}

QpMap binary_roi_assignment(const RegionMap& regions, int qp_high_quality, int qp_low_quality) {
  if (qp_high_quality >= qp_low_quality) {
    throw InvalidConfig("binary RoI: high-quality QP must be below the low-quality QP");
  }
  if (qp_high_quality < 0 || qp_low_quality > kMaxQp) throw InvalidConfig("binary RoI: QP outside [0,51]");
  QpMap out(regions.rows(), regions.cols(), qp_low_quality);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i] == Region::kRoi) out[i] = qp_high_quality;
  }
  return out;
}

void VarianceAqConfig::validate() const {
  if (!std::isfinite(strength) || strength < 0.0) throw InvalidConfig("variance AQ: strength must be >= 0");
  if (clamp < 0) throw InvalidConfig("variance AQ: clamp must be >= 0");
}

std::vector<int> variance_aq_offsets(const Frame& frame, const VarianceAqConfig& cfg) {
  cfg.validate();
  const MbGrid grid = partition(frame);
  const Frame padded = pad_to_macroblocks(frame);
  std::vector<double> logvar(static_cast<std::size_t>(grid.count()));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      double sum = 0.0, sum_sq = 0.0;
      for (int y = 0; y < kMbSize; ++y) {
        for (int x = 0; x < kMbSize; ++x) {
          const double v = padded.at(c * kMbSize + x, r * kMbSize + y);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double n = kMbSize * kMbSize;
      const double var = std::max(0.0, sum_sq / n - (sum / n) * (sum / n));
      logvar[static_cast<std::size_t>(r) * grid.cols + c] = std::log2(var + 1.0);
    }
  }
  double mean = 0.0;
  for (double v : logvar) mean += v;
  mean /= static_cast<double>(logvar.size());
  const double sign = cfg.direction == AqDirection::kTexturedLower ? 1.0 : -1.0;
  std::vector<int> out(logvar.size());
  for (std::size_t i = 0; i < logvar.size(); ++i) {
    const double raw = sign * cfg.strength * (mean - logvar[i]);
    out[i] = std::clamp(static_cast<int>(std::lround(raw)), -cfg.clamp, cfg.clamp);
  }
  return out;
}

QpMap variance_aq(const Frame& frame, int base_qp, const VarianceAqConfig& cfg) {
  if (base_qp < 6 || base_qp > 45) throw InvalidInput("variance AQ: base QP outside [6,45]");
  const MbGrid grid = partition(frame);
  const std::vector<int> offsets = variance_aq_offsets(frame, cfg);
  QpMap out(grid.rows, grid.cols, base_qp);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(base_qp + offsets[i], 0, kMaxQp);
  return out;
}

BaselineResult variance_aq_search(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                  const VarianceAqConfig& cfg, const EmphasisTable& table) {
  BaselineResult last;
  for (int level = 0; level < kNumLevels; ++level) {
    last = evaluate_qp_map(Method::kVarianceAq, variance_aq(scene.frame, table.qp[level], cfg), scene,
                           oracle, tau);
    if (last.feasible) return last;
  }
  return last;
}

}  // namespace mbaq
