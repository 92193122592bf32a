#include "mbaq/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mbaq {

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& doc, const std::filesystem::path& path) {
  write_text_file(doc.dump(2) + "\n", path);
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Reads the keys of one JSON object into existing defaults and rejects keys
// it does not know.
class ObjectReader {
 public:
  ObjectReader(const Json& doc, std::string context) : doc_(doc), context_(std::move(context)) {
    if (!doc_.is_object()) throw InvalidConfig(context_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception&) {
      throw InvalidConfig(context_ + "." + key + ": wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) throw InvalidConfig(context_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const Json& doc_;
  std::string context_;
  std::set<std::string> seen_;
};

template <class T>
std::vector<T> flat_values(const Json& doc, const char* key, std::size_t& rows, std::size_t& cols,
                           const char* what) {
  if (!doc.is_object() || !doc.contains("rows") || !doc.contains("cols") || !doc.contains(key)) {
    throw ParseError(std::string(what) + ": expected {rows, cols, " + key + "}");
  }
  try {
    const long long r = doc.at("rows").get<long long>();
    const long long c = doc.at("cols").get<long long>();
    if (r < 0 || c < 0) throw ParseError(std::string(what) + ": negative shape");
    rows = static_cast<std::size_t>(r);
    cols = static_cast<std::size_t>(c);
    auto values = doc.at(key).get<std::vector<T>>();
    if (values.size() != rows * cols) {
      throw ParseError(std::string(what) + ": " + key + " has " + std::to_string(values.size()) +
                       " entries, expected " + std::to_string(rows * cols));
    }
    return values;
  } catch (const Json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

template <class G>
Json grid_to_json(const G& grid, const char* key) {
  Json doc;
  doc["rows"] = grid.rows();
  doc["cols"] = grid.cols();
  doc[key] = Json::array();
  for (const auto& v : grid) doc[key].push_back(v);
  return doc;
}

}  // namespace

Json emphasis_map_to_json(const EmphasisMap& em) { return grid_to_json(em, "levels"); }

EmphasisMap emphasis_map_from_json(const Json& doc) {
  std::size_t rows = 0, cols = 0;
  auto values = flat_values<int>(doc, "levels", rows, cols, "emphasis map");
  for (int v : values) {
    if (v < 0 || v >= kNumLevels) throw ParseError("emphasis map: level outside [0,4]");
  }
  return EmphasisMap(rows, cols, std::move(values));
}

Json qp_map_to_json(const QpMap& qp) { return grid_to_json(qp, "qp"); }

QpMap qp_map_from_json(const Json& doc) {
  std::size_t rows = 0, cols = 0;
  auto values = flat_values<int>(doc, "qp", rows, cols, "QP map");
  for (int v : values) {
    if (v < 0 || v > kMaxQp) throw ParseError("QP map: QP outside [0,51]");
  }
  return QpMap(rows, cols, std::move(values));
}

Json ssim_grid_to_json(const MbSsimGrid& grid) { return grid_to_json(grid, "ssim"); }

MbSsimGrid ssim_grid_from_json(const Json& doc) {
  std::size_t rows = 0, cols = 0;
  auto values = flat_values<double>(doc, "ssim", rows, cols, "SSIM grid");
  return MbSsimGrid(rows, cols, std::move(values));
}

QpMap MapFile::as_qp(const EmphasisTable& table) const {
  return is_emphasis ? apply_emphasis(emphasis, table) : qp;
}

MapFile read_map_file(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  MapFile out;
  try {
    if (doc.is_object() && doc.contains("levels")) {
      out.is_emphasis = true;
      out.emphasis = emphasis_map_from_json(doc);
    } else {
      out.qp = qp_map_from_json(doc);
    }
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

Json boxes_to_json(const std::vector<BoundingBox>& boxes) {
  Json arr = Json::array();
  for (const BoundingBox& b : boxes) arr.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
  return arr;
}

std::vector<BoundingBox> boxes_from_json(const Json& doc) {
  if (!doc.is_array()) throw ParseError("boxes: expected an array");
  std::vector<BoundingBox> out;
  try {
    for (const Json& b : doc) {
      out.push_back(BoundingBox{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(),
                                b.at("h").get<int>()});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("boxes: ") + e.what());
  }
  return out;
}

Json thresholds_to_json(const PetThresholds& thr) {
  return {{"t_roi", thr.t_roi}, {"t_bg", thr.t_bg}, {"pct_roi", thr.pct_roi}, {"pct_bg", thr.pct_bg}};
}

Json model_to_json(const LinearEAModel& model) {
  const auto& p = model.params();
  Json doc;
  doc["schema_version"] = 1;
  doc["type"] = "linear";
  doc["features"] = {"mean", "variance", "gradient", "ssim_low", "row", "col"};
  doc["weights"] = Json::array();
  for (const auto& row : p.weights) doc["weights"].push_back(row);
  doc["bias"] = p.bias;
  doc["norm"] = {{"mean", p.norm.mean}, {"scale", p.norm.scale}};
  return doc;
}

LinearEAModel model_from_json(const Json& doc) {
  LinearEAModel::Params p;
  try {
    if (doc.at("type").get<std::string>() != "linear") throw ParseError("model: unsupported type");
    const Json& w = doc.at("weights");
    if (!w.is_array() || w.size() != kNumLevels) throw ParseError("model: weights must be 5 rows");
    for (int l = 0; l < kNumLevels; ++l) {
      p.weights[l] = w.at(l).get<FeatureVector>();
    }
    p.bias = doc.at("bias").get<LevelProbs>();
    p.norm.mean = doc.at("norm").at("mean").get<FeatureVector>();
    p.norm.scale = doc.at("norm").at("scale").get<FeatureVector>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  for (double s : p.norm.scale) {
    if (!(s > 0.0)) throw ParseError("model: normalization scale must be positive");
  }
  return LinearEAModel(p);
}

Json scene_config_to_json(const SceneConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"min_objects", c.min_objects},
          {"max_objects", c.max_objects},
          {"min_object_size", c.min_object_size},
          {"max_object_size", c.max_object_size},
          {"background_amplitude", c.background_amplitude},
          {"background_period", c.background_period},
          {"background_detail_amplitude", c.background_detail_amplitude},
          {"background_detail_period", c.background_detail_period},
          {"noise_sigma", c.noise_sigma},
          {"min_contrast", c.min_contrast},
          {"max_contrast", c.max_contrast},
          {"min_texture_amplitude", c.min_texture_amplitude},
          {"max_texture_amplitude", c.max_texture_amplitude},
          {"min_texture_cell", c.min_texture_cell},
          {"max_texture_cell", c.max_texture_cell},
          {"rim_width", c.rim_width},
          {"interior_ratio", c.interior_ratio},
          {"min_separation", c.min_separation},
          {"jitter", c.jitter},
          {"placement_retries", c.placement_retries}};
}

SceneConfig scene_config_from_json(const Json& doc) {
  SceneConfig c;
  ObjectReader r(doc, "scene");
  r.get("width", c.width);
  r.get("height", c.height);
  r.get("min_objects", c.min_objects);
  r.get("max_objects", c.max_objects);
  r.get("min_object_size", c.min_object_size);
  r.get("max_object_size", c.max_object_size);
  r.get("background_amplitude", c.background_amplitude);
  r.get("background_period", c.background_period);
  r.get("background_detail_amplitude", c.background_detail_amplitude);
  r.get("background_detail_period", c.background_detail_period);
  r.get("noise_sigma", c.noise_sigma);
  r.get("min_contrast", c.min_contrast);
  r.get("max_contrast", c.max_contrast);
  r.get("min_texture_amplitude", c.min_texture_amplitude);
  r.get("max_texture_amplitude", c.max_texture_amplitude);
  r.get("min_texture_cell", c.min_texture_cell);
  r.get("max_texture_cell", c.max_texture_cell);
  r.get("rim_width", c.rim_width);
  r.get("interior_ratio", c.interior_ratio);
  r.get("min_separation", c.min_separation);
  r.get("jitter", c.jitter);
  r.get("placement_retries", c.placement_retries);
  r.finish();
  c.validate();
  return c;
}

namespace {

const char* gradient_mode_name(GradientMode m) {
  return m == GradientMode::kAccuracyScaled ? "accuracy_scaled" : "alignment_only";
}

const char* proxy_mode_name(ProxyMode m) {
  return m == ProxyMode::kUniformDownward ? "uniform_downward" : "region_aware";
}

}  // namespace

Json trainer_config_to_json(const TrainerConfig& c) {
  return {{"p0", c.p0},
          {"p_decay", c.p_decay},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"penalty", c.penalty},
          {"lr_max", c.lr_max},
          {"lr_min", c.lr_min},
          {"tau", c.tau},
          {"max_epochs", c.max_epochs},
          {"sampler_r", c.sampler_r},
          {"pct_roi", c.pct_roi},
          {"pct_bg", c.pct_bg},
          {"gradient_mode", gradient_mode_name(c.gradient_mode)},
          {"proxy_mode", proxy_mode_name(c.proxy_mode)},
          {"share_thresholds", c.share_thresholds},
          {"plateau_rel", c.plateau_rel}};
}

TrainerConfig trainer_config_from_json(const Json& doc) {
  TrainerConfig c;
  ObjectReader r(doc, "trainer");
  r.get("p0", c.p0);
  r.get("p_decay", c.p_decay);
  r.get("lambda1", c.lambda1);
  r.get("lambda2", c.lambda2);
  r.get("penalty", c.penalty);
  r.get("lr_max", c.lr_max);
  r.get("lr_min", c.lr_min);
  r.get("tau", c.tau);
  r.get("max_epochs", c.max_epochs);
  r.get("sampler_r", c.sampler_r);
  r.get("pct_roi", c.pct_roi);
  r.get("pct_bg", c.pct_bg);
  std::string gm = gradient_mode_name(c.gradient_mode);
  std::string pm = proxy_mode_name(c.proxy_mode);
  r.get("gradient_mode", gm);
  r.get("proxy_mode", pm);
  r.get("share_thresholds", c.share_thresholds);
  r.get("plateau_rel", c.plateau_rel);
  r.finish();
  if (gm == "alignment_only") {
    c.gradient_mode = GradientMode::kAlignmentOnly;
  } else if (gm == "accuracy_scaled") {
    c.gradient_mode = GradientMode::kAccuracyScaled;
  } else {
    throw InvalidConfig("trainer.gradient_mode: expected alignment_only or accuracy_scaled");
  }
  if (pm == "region_aware") {
    c.proxy_mode = ProxyMode::kRegionAware;
  } else if (pm == "uniform_downward") {
    c.proxy_mode = ProxyMode::kUniformDownward;
  } else {
    throw InvalidConfig("trainer.proxy_mode: expected region_aware or uniform_downward");
  }
  c.validate();
  return c;
}

Json detector_config_to_json(const DetectorConfig& c) {
  return {{"threshold", c.threshold},
          {"min_area", c.min_area},
          {"closing_radius", c.closing_radius},
          {"iou_threshold", c.iou_threshold}};
}

DetectorConfig detector_config_from_json(const Json& doc) {
  DetectorConfig c;
  ObjectReader r(doc, "detector");
  r.get("threshold", c.threshold);
  r.get("min_area", c.min_area);
  r.get("closing_radius", c.closing_radius);
  r.get("iou_threshold", c.iou_threshold);
  r.finish();
  c.validate();
  return c;
}

Json variance_aq_config_to_json(const VarianceAqConfig& c) {
  return {{"strength", c.strength},
          {"clamp", c.clamp},
          {"direction", c.direction == AqDirection::kFlatLower ? "flat_lower" : "textured_lower"}};
}

VarianceAqConfig variance_aq_config_from_json(const Json& doc) {
  VarianceAqConfig c;
  ObjectReader r(doc, "variance_aq");
  r.get("strength", c.strength);
  r.get("clamp", c.clamp);
  std::string dir = c.direction == AqDirection::kFlatLower ? "flat_lower" : "textured_lower";
  r.get("direction", dir);
  r.finish();
  if (dir == "flat_lower") {
    c.direction = AqDirection::kFlatLower;
  } else if (dir == "textured_lower") {
    c.direction = AqDirection::kTexturedLower;
  } else {
    throw InvalidConfig("variance_aq.direction: expected flat_lower or textured_lower");
  }
  c.validate();
  return c;
}

}  // namespace mbaq
