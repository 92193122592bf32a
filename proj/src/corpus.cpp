#include "mbaq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mbaq/io.hpp"
#include "mbaq/rng.hpp"

namespace mbaq {

std::string CorpusFrame::stem() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scene_%03zu_f%03d", scene_id, frame);
  return buf;
}

std::vector<CorpusFrame> generate_corpus(const RunConfig& cfg) {
  cfg.validate();
  std::vector<CorpusFrame> out;
  for (int i = 0; i < cfg.scenes; ++i) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    std::vector<Scene> seq = generate_sequence(seed, cfg.scene, cfg.frames_per_scene);
    for (int f = 0; f < cfg.frames_per_scene; ++f) {
      out.push_back(CorpusFrame{std::move(seq[static_cast<std::size_t>(f)]), static_cast<std::size_t>(i), f});
    }
  }
  return out;
}

void write_corpus(const std::vector<CorpusFrame>& frames, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const CorpusFrame& f : frames) {
    write_pgm(f.scene.frame, dir / (f.stem() + ".pgm"));
    Json doc;
    doc["schema_version"] = kCorpusSchemaVersion;
    doc["scene_id"] = f.scene_id;
    doc["frame"] = f.frame;
    doc["seed"] = f.scene.seed;
    doc["width"] = f.scene.frame.width();
    doc["height"] = f.scene.frame.height();
    doc["boxes"] = boxes_to_json(f.scene.gt_boxes);
    write_json_file(doc, dir / (f.stem() + ".json"));
  }
}

std::vector<CorpusFrame> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && p.filename().string().rfind("scene_", 0) == 0) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<CorpusFrame> out;
  for (const auto& path : files) {
    const Json doc = read_json_file(path);
    CorpusFrame f;
    try {
      f.scene_id = doc.at("scene_id").get<std::size_t>();
      f.frame = doc.at("frame").get<int>();
      f.scene.seed = doc.at("seed").get<std::uint64_t>();
      f.scene.gt_boxes = boxes_from_json(doc.at("boxes"));
      const int w = doc.at("width").get<int>();
      const int h = doc.at("height").get<int>();
      auto pgm = path;
      pgm.replace_extension(".pgm");
      f.scene.frame = read_pgm(pgm);
      if (f.scene.frame.width() != w || f.scene.frame.height() != h) {
        throw ParseError("frame size differs from the PGM");
      }
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    out.push_back(std::move(f));
  }
  if (out.empty()) throw IoError("corpus directory holds no frames: " + dir.string());
  std::stable_sort(out.begin(), out.end(), [](const CorpusFrame& a, const CorpusFrame& b) {
    return a.scene_id != b.scene_id ? a.scene_id < b.scene_id : a.frame < b.frame;
  });
  return out;
}

Split split_scenes(std::size_t n, std::uint64_t seed) {
  Split s;
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  if (n < 3) {
    s.train = s.validation = s.test = ids;
    return s;
  }
  Rng rng(derive_seed(seed, 0x5011ULL));
  // Fisher-Yates with the portable integer draw
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i)));
    std::swap(ids[i], ids[j]);
  }
  std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * n)));
  std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * n)));
  const std::size_t n_train = n - n_val - n_test;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

std::vector<CorpusFrame> select_scenes(const std::vector<CorpusFrame>& frames,
                                       const std::vector<std::size_t>& scene_ids) {
  const std::set<std::size_t> keep(scene_ids.begin(), scene_ids.end());
  std::vector<CorpusFrame> out;
  for (const CorpusFrame& f : frames) {
    if (keep.count(f.scene_id)) out.push_back(f);
  }
  return out;
}

}  // namespace mbaq
