#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "mbaq/baselines.hpp"

using namespace mbaq;
using namespace mbaq::testing;

namespace {

class PsnrOracle final : public AccuracyOracle {
 public:
  double score(const Frame&, const std::vector<BoundingBox>&) const override { return 1.0; }
  double score_in(const Scene& scene, const Frame& frame) const override {
    return psnr(scene.frame, frame) / kPsnrCapDb;
  }
};

// Left half flat, right half noisy.
Frame half_textured(Rng& rng) {
  Frame f(64, 32, 100);
  for (int y = 0; y < 32; ++y) {
    for (int x = 32; x < 64; ++x) f.at(x, y) = static_cast<std::uint8_t>(uniform_int(rng, 40, 200));
  }
  return f;
}

}  // namespace

TEST_CASE("method tags round trip") {
  for (Method m : {Method::kEmphasis, Method::kUniform, Method::kBinaryRoi, Method::kVarianceAq}) {
    CHECK(parse_method(method_tag(m)) == m);
  }
  CHECK(std::string(method_tag(Method::kVarianceAq)) == "variance_aq");
  CHECK_THROWS_AS(parse_method("x264"), InvalidInput);
}

TEST_CASE("uniform_qp_search picks the coarsest feasible level") {
  const Scene s = generate_scene(70, SceneConfig{});
  const PsnrOracle oracle;
  const BaselineResult loose = uniform_qp_search(s, oracle, 1.0);
  CHECK(loose.feasible);
  CHECK(loose.qp_map == uniform_qp(partition(s.frame), 45));

  const BaselineResult none = uniform_qp_search(s, oracle, 0.0);
  CHECK_FALSE(none.feasible);
  CHECK(none.qp_map == uniform_qp(partition(s.frame), 30));

  // a tau between two levels selects the first that meets it
  const EmphasisTable table;
  const double acc_r = oracle.score_in(s, s.frame);
  std::array<double, kNumLevels> gap{};
  for (int l = 0; l < kNumLevels; ++l) {
    gap[l] = std::abs(oracle.score_in(s, encode_frame(s.frame, uniform_qp(partition(s.frame), table.qp[l])).recon) -
                      acc_r);
  }
  const double tau = 0.5 * (gap[1] + gap[2]);
  int expected = kNumLevels - 1;
  for (int l = 0; l < kNumLevels; ++l) {
    if (gap[l] <= tau) {
      expected = l;
      break;
    }
  }
  const BaselineResult mid = uniform_qp_search(s, oracle, tau);
  CHECK(mid.feasible);
  CHECK(mid.qp_map[0] == table.qp[expected]);
  CHECK(mid.bits == encode_frame(s.frame, mid.qp_map).total_bits);
}

TEST_CASE("binary_roi_assignment examples") {
  const RegionMap regions(1, 3, std::vector<Region>{Region::kRoi, Region::kBackground, Region::kRoi});
  CHECK(binary_roi_assignment(regions) == QpMap(1, 3, std::vector<int>{30, 40, 30}));
  CHECK(binary_roi_assignment(regions, 20, 50) == QpMap(1, 3, std::vector<int>{20, 50, 20}));
  CHECK_THROWS_AS(binary_roi_assignment(regions, 40, 30), InvalidConfig);
  CHECK_THROWS_AS(binary_roi_assignment(regions, 30, 30), InvalidConfig);
  CHECK_THROWS_AS(binary_roi_assignment(regions, 30, 52), InvalidConfig);
}

TEST_CASE("variance_aq examples") {
  const Frame flat(48, 32, 90);
  for (int v : variance_aq_offsets(flat)) CHECK(v == 0);
  CHECK(variance_aq(flat, 37) == QpMap(2, 3, 37));

  Rng rng(71);
  const Frame f = half_textured(rng);
  VarianceAqConfig zero;
  zero.strength = 0.0;
  CHECK(variance_aq(f, 37, zero) == QpMap(2, 4, 37));

  VarianceAqConfig flat_lower;
  const QpMap a = variance_aq(f, 37, flat_lower);
  CHECK(a(0, 0) < 37);
  CHECK(a(0, 3) > 37);

  VarianceAqConfig textured_lower;
  textured_lower.direction = AqDirection::kTexturedLower;
  const QpMap b = variance_aq(f, 37, textured_lower);
  CHECK(b(0, 0) > 37);
  CHECK(b(0, 3) < 37);

  CHECK_THROWS_AS(variance_aq(f, 5), InvalidInput);
  CHECK_THROWS_AS(variance_aq(f, 46), InvalidInput);
  VarianceAqConfig bad;
  bad.strength = -1;
  CHECK_THROWS_AS(variance_aq(f, 37, bad), InvalidConfig);
}

TEST_CASE("variance_aq offsets are bounded, centered and mirror with the direction") {
  Rng rng(72);
  for (int n = 0; n < 60; ++n) {
    const Frame f = n % 2 ? random_frame(rng, uniform_int(rng, 16, 96), uniform_int(rng, 16, 96))
                          : smooth_frame(rng, uniform_int(rng, 16, 96), uniform_int(rng, 16, 96));
    VarianceAqConfig cfg;
    cfg.strength = 0.25 + 2 * uniform01(rng);
    cfg.clamp = uniform_int(rng, 0, 8);
    const auto off = variance_aq_offsets(f, cfg);
    cfg.direction = AqDirection::kTexturedLower;
    const auto mirrored = variance_aq_offsets(f, cfg);
    for (std::size_t i = 0; i < off.size(); ++i) {
      CHECK(std::abs(off[i]) <= cfg.clamp);
      CHECK(mirrored[i] == -off[i]);
    }
    bool clamped = false;
    for (int v : off) clamped = clamped || std::abs(v) == cfg.clamp;
    if (!clamped) {
      // unclamped rounding moves each offset by at most half a step
      double mean = 0;
      for (int v : off) mean += v;
      CHECK(std::abs(mean / static_cast<double>(off.size())) <= 0.5);
    }
  }
}

TEST_CASE("variance_aq_search returns the first feasible base") {
  const Scene s = generate_scene(73, SceneConfig{});
  const PsnrOracle oracle;
  const BaselineResult r = variance_aq_search(s, oracle, 1.0);
  CHECK(r.feasible);
  CHECK(r.method == Method::kVarianceAq);
  CHECK(r.qp_map == variance_aq(s.frame, 45));
  const BaselineResult none = variance_aq_search(s, oracle, 0.0);
  CHECK_FALSE(none.feasible);
  CHECK(none.qp_map == variance_aq(s.frame, 30));
}
