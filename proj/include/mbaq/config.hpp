#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mbaq/baselines.hpp"
#include "mbaq/io.hpp"
#include "mbaq/oracle.hpp"
#include "mbaq/rer.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

struct BaselineToggles {
  bool uniform = true;
  bool binary_roi = true;
  bool variance_aq = true;
  int binary_qp_high = 30;
  int binary_qp_low = 40;
};

enum class OracleKind { kDetection, kEdgeRetention };

enum class SweepSplit { kTest, kAll };

struct RunConfig {
  SceneConfig scene;
  TrainerConfig trainer;
  DetectorConfig detector;
  VarianceAqConfig variance_aq;
  BaselineToggles baselines;
  OracleKind oracle = OracleKind::kDetection;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int scenes = 20;
  int frames_per_scene = 1;
  // Emphasis prediction is re-run every `interval` frames of a sequence.
  int interval = 1;
  SweepSplit sweep_split = SweepSplit::kTest;

  void validate() const;
};

// Every key is optional; unknown keys are rejected.
RunConfig run_config_from_json(const Json& doc);
Json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

std::unique_ptr<AccuracyOracle> make_oracle(const RunConfig& cfg);

}  // namespace mbaq
