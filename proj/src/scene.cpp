#include "mbaq/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mbaq/rng.hpp"

namespace mbaq {

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0) throw InvalidConfig("scene: frame size must be positive");
  if (min_objects < 0 || max_objects < min_objects) {
    throw InvalidConfig("scene: object count range is invalid");
  }
  if (min_object_size <= 0 || max_object_size < min_object_size) {
    throw InvalidConfig("scene: object size range is invalid");
  }
  if (max_object_size > std::min(width, height)) {
    throw InvalidConfig("scene: objects larger than the frame");
  }
  if (min_contrast < 0 || max_contrast < min_contrast) {
    throw InvalidConfig("scene: contrast range is invalid");
  }
  if (noise_sigma < 0 || background_amplitude < 0 || min_texture_amplitude < 0 ||
      max_texture_amplitude < min_texture_amplitude) {
    throw InvalidConfig("scene: amplitudes must be non-negative ranges");
  }
  if (min_texture_cell < 1 || max_texture_cell < min_texture_cell) {
    throw InvalidConfig("scene: texture cell range is invalid");
  }
  if (background_detail_amplitude < 0 || background_detail_period <= 0) {
    throw InvalidConfig("scene: background detail must have non-negative amplitude and positive period");
  }
  if (background_period <= 0) throw InvalidConfig("scene: background period must be positive");
  if (rim_width < 0 || interior_ratio < 0.0 || interior_ratio > 1.0) {
    throw InvalidConfig("scene: rim width must be non-negative and interior ratio in [0,1]");
  }
  if (min_separation < 0 || jitter < 0 || placement_retries <= 0) {
    throw InvalidConfig("scene: separation, jitter and retries must be non-negative");
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Background {
  double period_x = 1.0;
  double period_y = 1.0;
  double phase_x = 0.0;
  double phase_y = 0.0;
  double detail_dx = 1.0;
  double detail_dy = 0.0;
  double detail_phase = 0.0;
};

struct ObjectStyle {
  double offset = 0.0;  // signed contrast
  double texture_amplitude = 0.0;
  int texture_cell = 1;
  std::uint64_t texture_seed = 0;
};

struct Layout {
  Background background;
  std::vector<BoundingBox> boxes;
  std::vector<ObjectStyle> styles;
};

bool separated(const BoundingBox& a, const BoundingBox& b, int gap) {
  return a.right() + gap <= b.x || b.right() + gap <= a.x || a.bottom() + gap <= b.y ||
         b.bottom() + gap <= a.y;
}

bool fits(const BoundingBox& box, const std::vector<BoundingBox>& others, std::size_t skip,
          int gap) {
  for (std::size_t k = 0; k < others.size(); ++k) {
    if (k != skip && !separated(box, others[k], gap)) return false;
  }
  return true;
}

Layout make_layout(Rng& rng, const SceneConfig& cfg) {
  Layout layout;
  layout.background.period_x = cfg.background_period * (0.75 + 0.5 * uniform01(rng));
  layout.background.period_y = cfg.background_period * (0.75 + 0.5 * uniform01(rng));
  layout.background.phase_x = kTwoPi * uniform01(rng);
  layout.background.phase_y = kTwoPi * uniform01(rng);
  const double angle = kTwoPi * uniform01(rng);
  layout.background.detail_dx = std::cos(angle);
  layout.background.detail_dy = std::sin(angle);
  layout.background.detail_phase = kTwoPi * uniform01(rng);

  const int count = uniform_int(rng, cfg.min_objects, cfg.max_objects);
  for (int n = 0; n < count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      BoundingBox box;
      box.w = uniform_int(rng, cfg.min_object_size, cfg.max_object_size);
      box.h = uniform_int(rng, cfg.min_object_size, cfg.max_object_size);
      box.x = uniform_int(rng, 0, cfg.width - box.w);
      box.y = uniform_int(rng, 0, cfg.height - box.h);
      if (fits(box, layout.boxes, layout.boxes.size(), cfg.min_separation)) {
        layout.boxes.push_back(box);
        placed = true;
      }
    }
    if (!placed) {
      throw PlacementError("could not place object " + std::to_string(n) + " after " +
                           std::to_string(cfg.placement_retries) + " attempts");
    }
    ObjectStyle style;
    const double contrast = cfg.min_contrast + (cfg.max_contrast - cfg.min_contrast) * uniform01(rng);
    style.offset = (rng() & 1) ? contrast : -contrast;
    style.texture_amplitude = cfg.min_texture_amplitude +
                              (cfg.max_texture_amplitude - cfg.min_texture_amplitude) * uniform01(rng);
    style.texture_cell = uniform_int(rng, cfg.min_texture_cell, cfg.max_texture_cell);
    style.texture_seed = rng();
    layout.styles.push_back(style);
  }
  return layout;
}

Frame render(const Layout& layout, const SceneConfig& cfg, Rng& noise_rng) {
  std::vector<double> plane(static_cast<std::size_t>(cfg.width) * cfg.height);
  const Background& bg = layout.background;
  for (int y = 0; y < cfg.height; ++y) {
    const double sy = std::sin(kTwoPi * y / bg.period_y + bg.phase_y);
    for (int x = 0; x < cfg.width; ++x) {
      const double sx = std::sin(kTwoPi * x / bg.period_x + bg.phase_x);
      const double detail = std::sin(kTwoPi * (x * bg.detail_dx + y * bg.detail_dy) /
                                         cfg.background_detail_period +
                                     bg.detail_phase);
      plane[static_cast<std::size_t>(y) * cfg.width + x] =
          128.0 + 0.5 * cfg.background_amplitude * (sx + sy) +
          cfg.background_detail_amplitude * detail;
    }
  }
  for (std::size_t k = 0; k < layout.boxes.size(); ++k) {
    const BoundingBox& b = layout.boxes[k];
    const ObjectStyle& s = layout.styles[k];
    for (int y = b.y; y < b.bottom(); ++y) {
      for (int x = b.x; x < b.right(); ++x) {
        // texture is anchored to the object so it moves with it
        const auto cu = static_cast<std::uint64_t>((x - b.x) / s.texture_cell);
        const auto cv = static_cast<std::uint64_t>((y - b.y) / s.texture_cell);
        const std::uint64_t h = mix_seed(s.texture_seed ^ mix_seed((cv << 32) | cu));
        const double cell = (h >> 63) ? 1.0 : -1.0;
        const int edge = std::min({x - b.x, y - b.y, b.right() - 1 - x, b.bottom() - 1 - y});
        const double level = (cfg.rim_width > 0 && edge >= cfg.rim_width) ? cfg.interior_ratio : 1.0;
        plane[static_cast<std::size_t>(y) * cfg.width + x] +=
            level * s.offset + s.texture_amplitude * cell;
      }
    }
  }
  Frame frame(cfg.width, cfg.height);
  auto luma = frame.luma();
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const double v = plane[i] + (cfg.noise_sigma > 0 ? cfg.noise_sigma * gaussian(noise_rng) : 0.0);
    luma[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return frame;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  cfg.validate();
  Rng layout_rng(derive_seed(seed, 0));
  const Layout layout = make_layout(layout_rng, cfg);
  Rng noise_rng(derive_seed(seed, 1));
  return Scene{render(layout, cfg, noise_rng), layout.boxes, seed};
}

std::vector<Scene> generate_sequence(std::uint64_t seed, const SceneConfig& cfg, int frames) {
  if (frames <= 0) throw InvalidConfig("sequence needs at least one frame");
  cfg.validate();
  Rng layout_rng(derive_seed(seed, 0));
  Layout layout = make_layout(layout_rng, cfg);
  Rng motion_rng(derive_seed(seed, 2));

  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    if (f > 0 && cfg.jitter > 0) {
      for (std::size_t k = 0; k < layout.boxes.size(); ++k) {
        BoundingBox moved = layout.boxes[k];
        moved.x = std::clamp(moved.x + uniform_int(motion_rng, -cfg.jitter, cfg.jitter), 0,
                             cfg.width - moved.w);
        moved.y = std::clamp(moved.y + uniform_int(motion_rng, -cfg.jitter, cfg.jitter), 0,
                             cfg.height - moved.h);
        if (fits(moved, layout.boxes, k, cfg.min_separation)) layout.boxes[k] = moved;
      }
    }
    // Frame 0 shares its noise stream with generate_scene so a one-frame
    // sequence equals the single scene.
    Rng noise_rng(f == 0 ? derive_seed(seed, 1) : derive_seed(derive_seed(seed, 3), f));
    out.push_back(Scene{render(layout, cfg, noise_rng), layout.boxes, seed});
  }
  return out;
}

}  // namespace mbaq
