#pragma once

#include <optional>
#include <vector>

#include "mbaq/frame.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

struct DetectorConfig {
  // Threshold on the Sobel magnitude, normalized so a unit ramp reads 1.
  double threshold = 24.0;
  int min_area = 64;
  int closing_radius = 1;
  double iou_threshold = 0.5;

  void validate() const;
};

// Downstream-task accuracy in [0,1]. Deterministic; scoring the raw frame
// defines the reference accuracy.
class AccuracyOracle {
 public:
  virtual ~AccuracyOracle() = default;
  virtual double score(const Frame& frame, const std::vector<BoundingBox>& gt) const = 0;
  // Entry point used by training and evaluation. Oracles that compare the
  // candidate against the raw frame override this.
  virtual double score_in(const Scene& scene, const Frame& frame) const {
    return score(frame, scene.gt_boxes);
  }
};

// Sobel gradient magnitude (normalized by 1/8), edge-replicated borders.
std::vector<float> sobel_magnitude(const Frame& frame);

std::vector<BoundingBox> detect_blobs(const Frame& frame, const DetectorConfig& cfg = {});

double iou(const BoundingBox& a, const BoundingBox& b);

// Greedy one-to-one matching in descending IoU; F1 over matches with
// IoU >= iou_thresh. 1 when both sets are empty, 0 when exactly one is.
double detection_f1(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                    double iou_thresh = 0.5);

// F1 between thresholded edge maps of raw and recon over RoI macroblocks.
double edge_retention_score(const Frame& raw, const Frame& recon, const RegionMap& regions,
                            double threshold = 24.0);

class DetectionOracle final : public AccuracyOracle {
 public:
  explicit DetectionOracle(DetectorConfig cfg = {});
  double score(const Frame& frame, const std::vector<BoundingBox>& gt) const override;
  const DetectorConfig& config() const { return cfg_; }

 private:
  DetectorConfig cfg_;
};

class EdgeRetentionOracle final : public AccuracyOracle {
 public:
  explicit EdgeRetentionOracle(double threshold = 24.0, std::optional<Frame> reference = {});
  // Requires a reference frame given at construction.
  double score(const Frame& frame, const std::vector<BoundingBox>& gt) const override;
  double score_in(const Scene& scene, const Frame& frame) const override;

 private:
  double threshold_;
  std::optional<Frame> reference_;
};

}  // namespace mbaq
