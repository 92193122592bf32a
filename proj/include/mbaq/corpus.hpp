#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mbaq/config.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

inline constexpr int kCorpusSchemaVersion = 1;

struct CorpusFrame {
  Scene scene;
  std::size_t scene_id = 0;
  int frame = 0;

  std::string stem() const;
};

// Scene i of the run uses seed derive_seed(cfg.seed, i) and yields
// cfg.frames_per_scene frames.
std::vector<CorpusFrame> generate_corpus(const RunConfig& cfg);

// One PGM and one JSON (ground truth plus provenance) per frame.
void write_corpus(const std::vector<CorpusFrame>& frames, const std::filesystem::path& dir);
// Frames ordered by (scene_id, frame).
std::vector<CorpusFrame> load_corpus(const std::filesystem::path& dir);

// Scene-level 70:20:10 split by a seeded shuffle. Fewer than three scenes
// put every scene in every split.
struct Split {
  std::vector<std::size_t> train, validation, test;
};
Split split_scenes(std::size_t scene_count, std::uint64_t seed);

std::vector<CorpusFrame> select_scenes(const std::vector<CorpusFrame>& frames,
                                       const std::vector<std::size_t>& scene_ids);

}  // namespace mbaq
