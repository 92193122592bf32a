#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>

#include "generators.hpp"
#include "mbaq/corpus.hpp"
#include "mbaq/oracle.hpp"
#include "mbaq/scene.hpp"

using namespace mbaq;
using namespace mbaq::testing;

namespace {

// Straightforward detector: direct 2-D windows for the closing and a
// union-find labelling, sharing no code with the library.
std::vector<BoundingBox> naive_detect(const Frame& f, const DetectorConfig& cfg) {
  const int w = f.width(), h = f.height();
  auto px = [&](int x, int y) { return static_cast<double>(f.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };
  std::vector<int> edge(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1) - px(x - 1, y - 1) -
                        2 * px(x - 1, y) - px(x - 1, y + 1);
      const double gy = px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1) - px(x - 1, y - 1) -
                        2 * px(x, y - 1) - px(x + 1, y - 1);
      edge[y * w + x] = static_cast<float>(std::hypot(gx, gy) / 8.0) >= cfg.threshold;
    }
  }
  const int r = cfg.closing_radius;
  auto window = [&](const std::vector<int>& m, int x, int y, bool any, bool outside) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int xx = x + dx, yy = y + dy;
        const bool v = (xx < 0 || yy < 0 || xx >= w || yy >= h) ? outside : m[yy * w + xx] != 0;
        if (any && v) return true;
        if (!any && !v) return false;
      }
    }
    return !any;
  };
  std::vector<int> dil(edge.size()), clo(edge.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) dil[y * w + x] = window(edge, x, y, true, false);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) clo[y * w + x] = window(dil, x, y, false, true);
  }
  std::vector<int> parent(edge.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!clo[y * w + x]) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h || !clo[yy * w + xx]) continue;
          parent[find(y * w + x)] = find(yy * w + xx);
        }
      }
    }
  }
  std::map<int, std::tuple<int, int, int, int, int>> comps;  // root -> area, x0, y0, x1, y1
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!clo[y * w + x]) continue;
      auto [it, fresh] = comps.try_emplace(find(y * w + x), 0, x, y, x, y);
      auto& [area, x0, y0, x1, y1] = it->second;
      ++area;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  std::vector<BoundingBox> out;
  for (const auto& [root, c] : comps) {
    const auto& [area, x0, y0, x1, y1] = c;
    if (area >= cfg.min_area) out.push_back({x0, y0, x1 - x0 + 1, y1 - y0 + 1});
  }
  std::sort(out.begin(), out.end(), [](const BoundingBox& a, const BoundingBox& b) {
    return std::tie(a.y, a.x, a.h, a.w) < std::tie(b.y, b.x, b.h, b.w);
  });
  return out;
}

}  // namespace

TEST_CASE("iou examples") {
  const BoundingBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox{5, 5, 2, 2}) == 0.0);
  CHECK(iou(a, BoundingBox{1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou(a, BoundingBox{2, 0, 2, 2}) == 0.0);  // touching edges do not overlap
}

TEST_CASE("iou is symmetric and bounded") {
  Rng rng(41);
  for (int n = 0; n < 1000; ++n) {
    const BoundingBox a = random_box(rng, 50, 50), b = random_box(rng, 50, 50);
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("detection_f1 examples") {
  const std::vector<BoundingBox> gt{{0, 0, 10, 10}, {20, 20, 10, 10}};
  CHECK(detection_f1(gt, gt) == 1.0);
  CHECK(detection_f1({}, gt) == 0.0);
  CHECK(detection_f1(gt, {}) == 0.0);
  CHECK(detection_f1({}, {}) == 1.0);
  CHECK(detection_f1({gt[0]}, gt) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // a duplicate prediction is a false positive, not a second match
  CHECK(detection_f1({gt[0], gt[0]}, {gt[0]}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // below the IoU threshold nothing matches
  CHECK(detection_f1({BoundingBox{5, 0, 10, 10}}, {gt[0]}) == 0.0);
}

TEST_CASE("detection_f1 agrees with an independent greedy matcher") {
  Rng rng(42);
  for (int n = 0; n < 500; ++n) {
    std::vector<BoundingBox> pred, gt;
    for (int k = uniform_int(rng, 0, 4); k > 0; --k) gt.push_back(random_box(rng, 40, 40));
    for (const BoundingBox& g : gt) {
      if (uniform01(rng) < 0.7) {
        BoundingBox p = g;
        p.x = std::max(0, p.x + uniform_int(rng, -2, 2));
        p.w = std::max(1, p.w + uniform_int(rng, -2, 2));
        pred.push_back(p);
      }
    }
    for (int k = uniform_int(rng, 0, 2); k > 0; --k) pred.push_back(random_box(rng, 40, 40));

    // oracle: repeatedly take the best remaining pair
    std::vector<bool> pu(pred.size()), gu(gt.size());
    int tp = 0;
    while (true) {
      double best = -1.0;
      std::size_t bp = 0, bg = 0;
      for (std::size_t p = 0; p < pred.size(); ++p) {
        for (std::size_t g = 0; g < gt.size(); ++g) {
          if (pu[p] || gu[g]) continue;
          const double v = iou(pred[p], gt[g]);
          if (v > best) {
            best = v;
            bp = p;
            bg = g;
          }
        }
      }
      if (best < 0.5) break;
      pu[bp] = gu[bg] = true;
      ++tp;
    }
    double expected;
    if (pred.empty() && gt.empty()) {
      expected = 1.0;
    } else if (tp == 0) {
      expected = 0.0;
    } else {
      const double pr = double(tp) / pred.size(), rc = double(tp) / gt.size();
      expected = 2 * pr * rc / (pr + rc);
    }
    const double f1 = detection_f1(pred, gt);
    CHECK(f1 == doctest::Approx(expected).epsilon(1e-12));
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
  }
}

TEST_CASE("detect_blobs examples") {
  CHECK(detect_blobs(Frame(64, 64, 100)).empty());

  // one high-contrast rectangle on a smooth background
  Frame f(96, 96);
  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 96; ++x) f.at(x, y) = static_cast<std::uint8_t>(100 + x / 8);
  }
  const BoundingBox gt{30, 20, 28, 36};
  for (int y = gt.y; y < gt.bottom(); ++y) {
    for (int x = gt.x; x < gt.right(); ++x) f.at(x, y) = 200;
  }
  const auto boxes = detect_blobs(f);
  REQUIRE(boxes.size() == 1);
  CHECK(std::abs(boxes[0].x - gt.x) <= 2);
  CHECK(std::abs(boxes[0].y - gt.y) <= 2);
  CHECK(std::abs(boxes[0].right() - gt.right()) <= 2);
  CHECK(std::abs(boxes[0].bottom() - gt.bottom()) <= 2);
  CHECK(detect_blobs(f) == boxes);

  DetectorConfig bad;
  bad.threshold = 0;
  CHECK_THROWS_AS(detect_blobs(f, bad), InvalidConfig);
}

TEST_CASE("detect_blobs agrees with a naive pipeline") {
  Rng rng(43);
  for (int n = 0; n < 40; ++n) {
    const int w = uniform_int(rng, 8, 48), h = uniform_int(rng, 8, 48);
    Frame f = smooth_frame(rng, w, h);
    for (int k = uniform_int(rng, 0, 4); k > 0; --k) {
      const BoundingBox b = random_box(rng, w, h);
      const auto v = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
      for (int y = b.y; y < b.bottom(); ++y) {
        for (int x = b.x; x < b.right(); ++x) f.at(x, y) = v;
      }
    }
    DetectorConfig cfg;
    cfg.closing_radius = uniform_int(rng, 0, 2);
    cfg.min_area = uniform_int(rng, 0, 40);
    cfg.threshold = 4.0 + 40.0 * uniform01(rng);
    CHECK(detect_blobs(f, cfg) == naive_detect(f, cfg));
  }
}

TEST_CASE("detector recall on raw generated scenes") {
  RunConfig cfg;
  cfg.scenes = 20;
  DetectionOracle oracle;
  std::size_t matched = 0, total = 0;
  for (const CorpusFrame& cf : generate_corpus(cfg)) {
    const auto pred = detect_blobs(cf.scene.frame);
    for (const BoundingBox& g : cf.scene.gt_boxes) {
      ++total;
      for (const BoundingBox& p : pred) {
        if (iou(p, g) >= 0.5) {
          ++matched;
          break;
        }
      }
    }
  }
  CHECK(static_cast<double>(matched) / total >= 0.95);
}

TEST_CASE("compression sensitivity: QP 30 scores at least QP 45 on the corpus") {
  RunConfig cfg;
  cfg.scenes = 20;
  DetectionOracle oracle;
  double f30 = 0, f45 = 0;
  for (const CorpusFrame& cf : generate_corpus(cfg)) {
    const MbGrid g = partition(cf.scene.frame);
    const double a = oracle.score(encode_frame(cf.scene.frame, uniform_qp(g, 30)).recon, cf.scene.gt_boxes);
    const double b = oracle.score(encode_frame(cf.scene.frame, uniform_qp(g, 45)).recon, cf.scene.gt_boxes);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    f30 += a;
    f45 += b;
  }
  CHECK(f30 >= f45);
}

TEST_CASE("edge_retention_score examples") {
  const Scene s = generate_scene(6, SceneConfig{});
  const RegionMap regions = classify_regions(partition(s.frame), s.gt_boxes);
  CHECK(edge_retention_score(s.frame, s.frame, regions) == 1.0);
  const Frame flat(s.frame.width(), s.frame.height(), 128);
  CHECK(edge_retention_score(s.frame, flat, regions) == 0.0);
  const RegionMap bg(regions.rows(), regions.cols(), Region::kBackground);
  CHECK(edge_retention_score(s.frame, flat, bg) == 1.0);
  CHECK_THROWS_AS(edge_retention_score(s.frame, Frame(16, 16), regions), InvalidInput);
}

TEST_CASE("edge retention falls as uniform QP rises") {
  RunConfig cfg;
  cfg.scenes = 5;
  EdgeRetentionOracle oracle;
  for (const CorpusFrame& cf : generate_corpus(cfg)) {
    const MbGrid g = partition(cf.scene.frame);
    double prev = 2.0;
    for (int qp : {4, 20, 30, 45, 51}) {
      const double v = oracle.score_in(cf.scene, encode_frame(cf.scene.frame, uniform_qp(g, qp)).recon);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
  CHECK_THROWS_AS(EdgeRetentionOracle().score(Frame(16, 16), {}), InvalidInput);
}
