#pragma once

#include <cstdint>
#include <vector>

#include "mbaq/frame.hpp"

namespace mbaq {

struct SceneConfig {
  int width = 256;
  int height = 256;
  int min_objects = 4;
  int max_objects = 7;
  int min_object_size = 20;
  int max_object_size = 44;
  // Peak deviation of the low-frequency sinusoidal background around 128.
  double background_amplitude = 24.0;
  double background_period = 160.0;
  // Mid-frequency plane wave on the background; costs bits but stays well
  // under the detector threshold.
  double background_detail_amplitude = 8.0;
  double background_detail_period = 10.0;
  double noise_sigma = 2.0;
  // Object mean offset from the local background, sign chosen at random.
  double min_contrast = 56.0;
  double max_contrast = 80.0;
  // Each object carries a random cell texture: square cells of side
  // [min_texture_cell, max_texture_cell] pixels, each cell uniformly offset
  // by + or - the object's texture amplitude.
  double min_texture_amplitude = 1.0;
  double max_texture_amplitude = 3.0;
  int min_texture_cell = 2;
  int max_texture_cell = 2;
  // Objects are drawn as a rim of rim_width pixels at the full contrast
  // around an interior at interior_ratio of it. rim_width 0 draws filled
  // rectangles.
  int rim_width = 0;
  double interior_ratio = 1.0;
  // Minimum empty gap between any two objects, in pixels.
  int min_separation = 8;
  // Maximum per-frame object displacement in generated sequences.
  int jitter = 1;
  int placement_retries = 500;

  void validate() const;
};

struct Scene {
  Frame frame;
  std::vector<BoundingBox> gt_boxes;
  std::uint64_t seed = 0;
};

// Pure function of (seed, cfg). Throws PlacementError when objects cannot be
// placed without overlap within the retry budget.
Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg);

// A short sequence of one scene: background is fixed, objects drift by at
// most cfg.jitter pixels per frame and noise is redrawn per frame.
std::vector<Scene> generate_sequence(std::uint64_t seed, const SceneConfig& cfg, int frames);

}  // namespace mbaq
