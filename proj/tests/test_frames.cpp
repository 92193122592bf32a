#include <doctest.h>

#include <fstream>

#include "generators.hpp"
#include "mbaq/frame.hpp"
#include "mbaq/scene.hpp"

using namespace mbaq;
using namespace mbaq::testing;

TEST_CASE("partition computes ceiling grid sizes") {
  CHECK(partition(256, 256) == MbGrid{16, 16});
  CHECK(partition(256, 256).count() == 256);
  const MbGrid hd = partition(1920, 1080);
  CHECK(hd.rows == 68);
  CHECK(hd.cols == 120);
  CHECK(hd.count() == 8160);
  // 17 rows high, 16 wide
  CHECK(partition(Frame(16, 17)) == MbGrid{2, 1});
  CHECK_THROWS_AS(partition(0, 16), InvalidInput);
  CHECK_THROWS_AS(partition(Frame(16, 0)), InvalidInput);
}

TEST_CASE("padding replicates edges and keeps the original extent") {
  Rng rng(11);
  for (int n = 0; n < 50; ++n) {
    const int w = uniform_int(rng, 1, 40), h = uniform_int(rng, 1, 40);
    const Frame f = random_frame(rng, w, h);
    const Frame p = pad_to_macroblocks(f);
    const MbGrid g = partition(f);
    REQUIRE(p.width() == g.padded_width());
    REQUIRE(p.height() == g.padded_height());
    for (int y = 0; y < p.height(); ++y) {
      for (int x = 0; x < p.width(); ++x) {
        CHECK(p.at(x, y) == f.at(std::min(x, w - 1), std::min(y, h - 1)));
      }
    }
    CHECK(crop(p, w, h) == f);
  }
  const Frame aligned(32, 16, 7);
  CHECK(pad_to_macroblocks(aligned) == aligned);
}

TEST_CASE("17x16 frame pads its extra row by replication") {
  Frame f(16, 17);
  for (int x = 0; x < 16; ++x) f.at(x, 16) = static_cast<std::uint8_t>(x * 10);
  const Frame p = pad_to_macroblocks(f);
  CHECK(p.height() == 32);
  for (int y = 16; y < 32; ++y) {
    for (int x = 0; x < 16; ++x) CHECK(p.at(x, y) == x * 10);
  }
}

TEST_CASE("classify_regions examples") {
  const MbGrid g = partition(64, 64);
  const RegionMap none = classify_regions(g, {});
  for (Region r : none) CHECK(r == Region::kBackground);

  const RegionMap all = classify_regions(g, {BoundingBox{0, 0, 64, 64}});
  for (Region r : all) CHECK(r == Region::kRoi);

  const RegionMap one = classify_regions(g, {BoundingBox{0, 0, 16, 16}});
  for (std::size_t r = 0; r < one.rows(); ++r) {
    for (std::size_t c = 0; c < one.cols(); ++c) {
      CHECK((one(r, c) == Region::kRoi) == (r == 0 && c == 0));
    }
  }
  // one pixel over the boundary spills into the neighbour
  const RegionMap spill = classify_regions(g, {BoundingBox{15, 0, 2, 1}});
  CHECK(spill(0, 0) == Region::kRoi);
  CHECK(spill(0, 1) == Region::kRoi);
  CHECK(spill(0, 2) == Region::kBackground);
}

TEST_CASE("classify_regions matches a per-pixel overlap oracle") {
  Rng rng(12);
  for (int n = 0; n < 100; ++n) {
    const int w = uniform_int(rng, 16, 80), h = uniform_int(rng, 16, 80);
    const MbGrid g = partition(w, h);
    std::vector<BoundingBox> boxes;
    for (int k = uniform_int(rng, 0, 3); k > 0; --k) boxes.push_back(random_box(rng, w, h));
    const RegionMap map = classify_regions(g, boxes);
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < g.cols; ++c) {
        bool hit = false;
        for (const BoundingBox& b : boxes) {
          for (int y = r * 16; y < r * 16 + 16 && !hit; ++y) {
            for (int x = c * 16; x < c * 16 + 16 && !hit; ++x) {
              hit = x >= b.x && x < b.right() && y >= b.y && y < b.bottom();
            }
          }
        }
        CHECK((map(r, c) == Region::kRoi) == hit);
      }
    }
  }
}

TEST_CASE("adding a box never turns RoI into background") {
  Rng rng(13);
  for (int n = 0; n < 100; ++n) {
    const MbGrid g = partition(96, 64);
    std::vector<BoundingBox> boxes;
    for (int k = uniform_int(rng, 0, 3); k > 0; --k) boxes.push_back(random_box(rng, 96, 64));
    const RegionMap before = classify_regions(g, boxes);
    boxes.push_back(random_box(rng, 96, 64));
    const RegionMap after = classify_regions(g, boxes);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] == Region::kRoi) CHECK(after[i] == Region::kRoi);
    }
  }
}

TEST_CASE("generate_scene is a pure function of seed and config") {
  SceneConfig cfg;
  const Scene a = generate_scene(7, cfg);
  const Scene b = generate_scene(7, cfg);
  CHECK(a.frame == b.frame);
  CHECK(a.gt_boxes == b.gt_boxes);
  const Scene c = generate_scene(8, cfg);
  CHECK(a.frame.luma().size() == c.frame.luma().size());
  CHECK_FALSE(a.frame == c.frame);

  SceneConfig empty = cfg;
  empty.min_objects = empty.max_objects = 0;
  const Scene e = generate_scene(7, empty);
  CHECK(e.gt_boxes.empty());
  for (Region r : classify_regions(partition(e.frame), e.gt_boxes)) CHECK(r == Region::kBackground);
}

TEST_CASE("generated boxes lie inside the frame and respect the separation") {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    CHECK(static_cast<int>(s.gt_boxes.size()) >= cfg.min_objects);
    CHECK(static_cast<int>(s.gt_boxes.size()) <= cfg.max_objects);
    for (std::size_t i = 0; i < s.gt_boxes.size(); ++i) {
      const BoundingBox& a = s.gt_boxes[i];
      CHECK(a.w > 0);
      CHECK(a.h > 0);
      CHECK(a.x >= 0);
      CHECK(a.y >= 0);
      CHECK(a.right() <= cfg.width);
      CHECK(a.bottom() <= cfg.height);
      for (std::size_t j = i + 1; j < s.gt_boxes.size(); ++j) {
        const BoundingBox& b = s.gt_boxes[j];
        const bool apart = a.right() + cfg.min_separation <= b.x || b.right() + cfg.min_separation <= a.x ||
                           a.bottom() + cfg.min_separation <= b.y || b.bottom() + cfg.min_separation <= a.y;
        CHECK(apart);
      }
    }
  }
}

TEST_CASE("scene placement failure and config validation") {
  SceneConfig crowded;
  crowded.width = crowded.height = 48;
  crowded.min_objects = crowded.max_objects = 20;
  crowded.min_object_size = crowded.max_object_size = 20;
  crowded.placement_retries = 50;
  CHECK_THROWS_AS(generate_scene(1, crowded), PlacementError);

  SceneConfig bad;
  bad.max_objects = bad.min_objects - 1;
  CHECK_THROWS_AS(generate_scene(1, bad), InvalidConfig);
  bad = SceneConfig{};
  bad.max_object_size = 1000;
  CHECK_THROWS_AS(generate_scene(1, bad), InvalidConfig);
  bad = SceneConfig{};
  bad.interior_ratio = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("one-frame sequence equals the single scene; jitter is bounded") {
  SceneConfig cfg;
  const auto seq = generate_sequence(5, cfg, 4);
  REQUIRE(seq.size() == 4);
  const Scene single = generate_scene(5, cfg);
  CHECK(seq[0].frame == single.frame);
  CHECK(seq[0].gt_boxes == single.gt_boxes);
  for (std::size_t f = 1; f < seq.size(); ++f) {
    REQUIRE(seq[f].gt_boxes.size() == seq[f - 1].gt_boxes.size());
    for (std::size_t k = 0; k < seq[f].gt_boxes.size(); ++k) {
      CHECK(std::abs(seq[f].gt_boxes[k].x - seq[f - 1].gt_boxes[k].x) <= cfg.jitter);
      CHECK(std::abs(seq[f].gt_boxes[k].y - seq[f - 1].gt_boxes[k].y) <= cfg.jitter);
      CHECK(seq[f].gt_boxes[k].w == seq[f - 1].gt_boxes[k].w);
    }
  }
  CHECK_THROWS_AS(generate_sequence(5, cfg, 0), InvalidConfig);
}

TEST_CASE("PGM round trip and parse errors") {
  Rng rng(14);
  const auto dir = temp_dir("pgm");
  const Frame f = random_frame(rng, 37, 21);
  write_pgm(f, dir / "a.pgm");
  CHECK(read_pgm(dir / "a.pgm") == f);

  std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), ParseError);
  std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK_THROWS_AS(read_pgm(dir / "short.pgm"), ParseError);
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), IoError);
}

TEST_CASE("frame constructor checks the buffer length") {
  CHECK_THROWS_AS(Frame(4, 4, std::vector<std::uint8_t>(15)), InvalidInput);
  CHECK_NOTHROW(Frame(4, 4, std::vector<std::uint8_t>(16)));
}
