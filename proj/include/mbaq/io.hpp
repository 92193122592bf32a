#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbaq/baselines.hpp"
#include "mbaq/codec.hpp"
#include "mbaq/oracle.hpp"
#include "mbaq/pet.hpp"
#include "mbaq/quality.hpp"
#include "mbaq/rer.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

using Json = nlohmann::ordered_json;

// Whole-file helpers. Parse failures name the file.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& doc, const std::filesystem::path& path);
void write_text_file(const std::string& text, const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// {"rows", "cols", "levels": flat row-major}
Json emphasis_map_to_json(const EmphasisMap& em);
EmphasisMap emphasis_map_from_json(const Json& doc);
// {"rows", "cols", "qp": flat row-major}
Json qp_map_to_json(const QpMap& qp);
QpMap qp_map_from_json(const Json& doc);
// {"rows", "cols", "ssim": flat row-major}
Json ssim_grid_to_json(const MbSsimGrid& grid);
MbSsimGrid ssim_grid_from_json(const Json& doc);

// A map file holds either an emphasis map or a QP map.
struct MapFile {
  bool is_emphasis = false;
  EmphasisMap emphasis;
  QpMap qp;

  QpMap as_qp(const EmphasisTable& table = {}) const;
};
MapFile read_map_file(const std::filesystem::path& path);

Json boxes_to_json(const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> boxes_from_json(const Json& doc);

Json thresholds_to_json(const PetThresholds& thr);

Json model_to_json(const LinearEAModel& model);
LinearEAModel model_from_json(const Json& doc);

Json scene_config_to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const Json& doc);
Json trainer_config_to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const Json& doc);
Json detector_config_to_json(const DetectorConfig& cfg);
DetectorConfig detector_config_from_json(const Json& doc);
Json variance_aq_config_to_json(const VarianceAqConfig& cfg);
VarianceAqConfig variance_aq_config_from_json(const Json& doc);

// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace mbaq
