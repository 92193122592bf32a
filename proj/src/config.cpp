#include "mbaq/config.hpp"

#include <memory>

namespace mbaq {

void RunConfig::validate() const {
  scene.validate();
  trainer.validate();
  detector.validate();
  variance_aq.validate();
  if (baselines.binary_qp_high >= baselines.binary_qp_low) {
    throw InvalidConfig("baselines: binary_qp_high must be below binary_qp_low");
  }
  if (baselines.binary_qp_high < 0 || baselines.binary_qp_low > kMaxQp) {
    throw InvalidConfig("baselines: binary QPs outside [0,51]");
  }
  if (scenes <= 0) throw InvalidConfig("scenes must be positive");
  if (frames_per_scene <= 0) throw InvalidConfig("frames_per_scene must be positive");
  if (interval < 1) throw InvalidConfig("interval must be >= 1");
}

namespace {

const char* oracle_name(OracleKind k) {
  return k == OracleKind::kEdgeRetention ? "edge_retention" : "detection";
}

const char* split_name(SweepSplit s) { return s == SweepSplit::kAll ? "all" : "test"; }

template <class T>
void read_key(const Json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->template get<T>();
  } catch (const Json::exception&) {
    throw InvalidConfig(std::string(key) + ": wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw InvalidConfig("run config: expected an object");
  static const char* const kKeys[] = {"scene",   "trainer", "detector", "variance_aq",
                                      "baselines", "oracle", "out_dir", "seed",
                                      "scenes",  "frames_per_scene", "interval", "sweep_split"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : kKeys) known = known || it.key() == k;
    if (!known) throw InvalidConfig("run config: unknown key '" + it.key() + "'");
  }
  RunConfig c;
  if (doc.contains("scene")) c.scene = scene_config_from_json(doc.at("scene"));
  if (doc.contains("trainer")) c.trainer = trainer_config_from_json(doc.at("trainer"));
  if (doc.contains("detector")) c.detector = detector_config_from_json(doc.at("detector"));
  if (doc.contains("variance_aq")) c.variance_aq = variance_aq_config_from_json(doc.at("variance_aq"));
  if (doc.contains("baselines")) {
    const Json& b = doc.at("baselines");
    if (!b.is_object()) throw InvalidConfig("baselines: expected an object");
    for (auto it = b.begin(); it != b.end(); ++it) {
      const std::string& k = it.key();
      if (k != "uniform" && k != "binary_roi" && k != "variance_aq" && k != "binary_qp_high" &&
          k != "binary_qp_low") {
        throw InvalidConfig("baselines: unknown key '" + k + "'");
      }
    }
    read_key(b, "uniform", c.baselines.uniform);
    read_key(b, "binary_roi", c.baselines.binary_roi);
    read_key(b, "variance_aq", c.baselines.variance_aq);
    read_key(b, "binary_qp_high", c.baselines.binary_qp_high);
    read_key(b, "binary_qp_low", c.baselines.binary_qp_low);
  }
  std::string oracle = oracle_name(c.oracle);
  read_key(doc, "oracle", oracle);
  if (oracle == "detection") {
    c.oracle = OracleKind::kDetection;
  } else if (oracle == "edge_retention") {
    c.oracle = OracleKind::kEdgeRetention;
  } else {
    throw InvalidConfig("oracle: expected detection or edge_retention");
  }
  std::string out = c.out_dir.string();
  read_key(doc, "out_dir", out);
  c.out_dir = out;
  read_key(doc, "seed", c.seed);
  read_key(doc, "scenes", c.scenes);
  read_key(doc, "frames_per_scene", c.frames_per_scene);
  read_key(doc, "interval", c.interval);
  std::string split = split_name(c.sweep_split);
  read_key(doc, "sweep_split", split);
  if (split == "test") {
    c.sweep_split = SweepSplit::kTest;
  } else if (split == "all") {
    c.sweep_split = SweepSplit::kAll;
  } else {
    throw InvalidConfig("sweep_split: expected test or all");
  }
  c.validate();
  return c;
}

Json run_config_to_json(const RunConfig& c) {
  return {{"scene", scene_config_to_json(c.scene)},
          {"trainer", trainer_config_to_json(c.trainer)},
          {"detector", detector_config_to_json(c.detector)},
          {"variance_aq", variance_aq_config_to_json(c.variance_aq)},
          {"baselines",
           {{"uniform", c.baselines.uniform},
            {"binary_roi", c.baselines.binary_roi},
            {"variance_aq", c.baselines.variance_aq},
            {"binary_qp_high", c.baselines.binary_qp_high},
            {"binary_qp_low", c.baselines.binary_qp_low}}},
          {"oracle", oracle_name(c.oracle)},
          {"out_dir", c.out_dir.string()},
          {"seed", c.seed},
          {"scenes", c.scenes},
          {"frames_per_scene", c.frames_per_scene},
          {"interval", c.interval},
          {"sweep_split", split_name(c.sweep_split)}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    return run_config_from_json(doc);
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(path.string() + ": " + e.what());
  }
}

std::unique_ptr<AccuracyOracle> make_oracle(const RunConfig& cfg) {
  if (cfg.oracle == OracleKind::kEdgeRetention) {
    return std::make_unique<EdgeRetentionOracle>(cfg.detector.threshold);
  }
  return std::make_unique<DetectionOracle>(cfg.detector);
}

}  // namespace mbaq
