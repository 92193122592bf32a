#include "mbaq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace mbaq {

void DetectorConfig::validate() const {
  if (!(threshold > 0)) throw InvalidConfig("detector threshold must be positive");
  if (min_area < 0) throw InvalidConfig("detector min_area must be non-negative");
  if (closing_radius < 0) throw InvalidConfig("detector closing radius must be non-negative");
  if (!(iou_threshold > 0 && iou_threshold < 1)) throw InvalidConfig("IoU threshold outside (0,1)");
}

std::vector<float> sobel_magnitude(const Frame& frame) {
  const int w = frame.width();
  const int h = frame.height();
  std::vector<float> mag(static_cast<std::size_t>(w) * h, 0.0f);
  if (w == 0 || h == 0) return mag;
  auto px = [&](int x, int y) {
    return static_cast<int>(frame.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const int gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      mag[static_cast<std::size_t>(y) * w + x] =
          static_cast<float>(std::sqrt(static_cast<double>(gx * gx + gy * gy)) / 8.0);
    }
  }
  return mag;
}

namespace {

using Mask = std::vector<std::uint8_t>;

// Square structuring element of side 2r+1. Pixels outside the frame count as
// `outside` so erosion does not eat components touching the border.
Mask morph(const Mask& in, int w, int h, int r, bool dilate) {
  if (r == 0) return in;
  // separable: horizontal pass then vertical pass
  Mask tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !dilate;
      for (int d = -r; d <= r; ++d) {
        const int xx = x + d;
        const bool s = (xx < 0 || xx >= w) ? !dilate : in[static_cast<std::size_t>(y) * w + xx] != 0;
        if (dilate ? s : !s) {
          v = dilate;
          break;
        }
      }
      tmp[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !dilate;
      for (int d = -r; d <= r; ++d) {
        const int yy = y + d;
        const bool s = (yy < 0 || yy >= h) ? !dilate : tmp[static_cast<std::size_t>(yy) * w + x] != 0;
        if (dilate ? s : !s) {
          v = dilate;
          break;
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return out;
}

}  // namespace

std::vector<BoundingBox> detect_blobs(const Frame& frame, const DetectorConfig& cfg) {
  cfg.validate();
  const int w = frame.width();
  const int h = frame.height();
  const std::vector<float> mag = sobel_magnitude(frame);
  Mask mask(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mask[i] = mag[i] >= cfg.threshold;
  mask = morph(morph(mask, w, h, cfg.closing_radius, true), w, h, cfg.closing_radius, false);

  std::vector<BoundingBox> boxes;
  std::vector<int> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask[static_cast<std::size_t>(y0) * w + x0]) continue;
      int area = 0;
      int xmin = x0, xmax = x0, ymin = y0, ymax = y0;
      mask[static_cast<std::size_t>(y0) * w + x0] = 0;
      stack.assign(1, y0 * w + x0);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int x = p % w;
        const int y = p / w;
        ++area;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            auto& m = mask[static_cast<std::size_t>(ny) * w + nx];
            if (m) {
              m = 0;
              stack.push_back(ny * w + nx);
            }
          }
        }
      }
      if (area >= cfg.min_area) {
        boxes.push_back(BoundingBox{xmin, ymin, xmax - xmin + 1, ymax - ymin + 1});
      }
    }
  }
  std::sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
    return std::tie(a.y, a.x, a.h, a.w) < std::tie(b.y, b.x, b.h, b.w);
  });
  return boxes;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const long long iw = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const long long ih = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const long long inter = iw * ih;
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double detection_f1(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                    double iou_thresh) {
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty()) return 0.0;
  struct Pair {
    double iou;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(pred[p], gt[g]);
      if (v >= iou_thresh) pairs.push_back({v, p, g});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(pred.size()), gt_used(gt.size());
  std::size_t tp = 0;
  for (const Pair& pr : pairs) {
    if (pred_used[pr.p] || gt_used[pr.g]) continue;
    pred_used[pr.p] = gt_used[pr.g] = true;
    ++tp;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / pred.size();
  const double recall = static_cast<double>(tp) / gt.size();
  return 2.0 * precision * recall / (precision + recall);
}

double edge_retention_score(const Frame& raw, const Frame& recon, const RegionMap& regions,
                            double threshold) {
  if (raw.width() != recon.width() || raw.height() != recon.height()) {
    throw InvalidInput("edge retention frames differ in dimensions");
  }
  const MbGrid grid = partition(raw);
  if (regions.rows() != static_cast<std::size_t>(grid.rows) ||
      regions.cols() != static_cast<std::size_t>(grid.cols)) {
    throw InvalidInput("region map shape does not match the frame");
  }
  if (std::none_of(regions.begin(), regions.end(), [](Region r) { return r == Region::kRoi; })) {
    return 1.0;
  }
  const auto a = sobel_magnitude(raw);
  const auto b = sobel_magnitude(recon);
  long long na = 0, nb = 0, both = 0;
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      if (regions(y / kMbSize, x / kMbSize) != Region::kRoi) continue;
      const std::size_t i = static_cast<std::size_t>(y) * raw.width() + x;
      const bool ea = a[i] >= threshold;
      const bool eb = b[i] >= threshold;
      na += ea;
      nb += eb;
      both += ea && eb;
    }
  }
  if (na == 0 && nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

DetectionOracle::DetectionOracle(DetectorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double DetectionOracle::score(const Frame& frame, const std::vector<BoundingBox>& gt) const {
  return detection_f1(detect_blobs(frame, cfg_), gt, cfg_.iou_threshold);
}

EdgeRetentionOracle::EdgeRetentionOracle(double threshold, std::optional<Frame> reference)
    : threshold_(threshold), reference_(std::move(reference)) {
  if (!(threshold > 0)) throw InvalidConfig("edge threshold must be positive");
}

double EdgeRetentionOracle::score(const Frame& frame, const std::vector<BoundingBox>& gt) const {
  if (!reference_) throw InvalidInput("edge retention oracle has no reference frame");
  return edge_retention_score(*reference_, frame, classify_regions(partition(frame), gt), threshold_);
}

double EdgeRetentionOracle::score_in(const Scene& scene, const Frame& frame) const {
  return edge_retention_score(scene.frame, frame,
                              classify_regions(partition(scene.frame), scene.gt_boxes), threshold_);
}

}  // namespace mbaq
