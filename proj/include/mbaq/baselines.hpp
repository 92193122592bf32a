#pragma once

#include <string>

#include "mbaq/codec.hpp"
#include "mbaq/frame.hpp"
#include "mbaq/oracle.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

enum class Method { kEmphasis, kUniform, kBinaryRoi, kVarianceAq };

// Stable tags used in reports and file names.
const char* method_tag(Method m);
Method parse_method(const std::string& tag);

struct BaselineResult {
  Method method = Method::kUniform;
  QpMap qp_map;
  std::int64_t bits = 0;
  double acc_c = 0.0;
  double acc_r = 0.0;
  bool feasible = false;
  Frame recon;
};

// Encodes `qp_map` and scores it the same way evaluate_objective does.
BaselineResult evaluate_qp_map(Method method, const QpMap& qp_map, const Scene& scene,
                               const AccuracyOracle& oracle, double tau);

// Uniform emphasis levels 0..4 in order; the first feasible one wins, level 4
// is returned flagged infeasible otherwise.
BaselineResult uniform_qp_search(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                 const EmphasisTable& table = {});

// RoI macroblocks get qp_high_quality, background qp_low_quality.
QpMap binary_roi_assignment(const RegionMap& regions, int qp_high_quality = 30,
                            int qp_low_quality = 40);

enum class AqDirection {
  kTexturedLower,  // offset = strength * (mean log-variance - own log-variance)
  kFlatLower,      // sign flipped: flat blocks get the lower QP
};

struct VarianceAqConfig {
  double strength = 1.0;
  int clamp = 6;
  AqDirection direction = AqDirection::kFlatLower;

  void validate() const;
};

QpMap variance_aq(const Frame& frame, int base_qp, const VarianceAqConfig& cfg = {});

// Per-macroblock offsets before they are added to the base QP.
std::vector<int> variance_aq_offsets(const Frame& frame, const VarianceAqConfig& cfg = {});

// Tries the table QPs as base from the coarsest to the finest and keeps the
// first feasible map; the finest base is returned flagged infeasible
// otherwise.
BaselineResult variance_aq_search(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                  const VarianceAqConfig& cfg = {},
                                  const EmphasisTable& table = {});

}  // namespace mbaq
