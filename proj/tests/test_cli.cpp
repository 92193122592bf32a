#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "mbaq/commands.hpp"
#include "mbaq/config.hpp"
#include "mbaq/corpus.hpp"
#include "mbaq/heatmap.hpp"
#include "mbaq/io.hpp"
#include "mbaq/report.hpp"

using namespace mbaq;
using namespace mbaq::testing;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(const fs::path& out, int scenes) {
  RunConfig cfg;
  cfg.scene.width = cfg.scene.height = 64;
  cfg.scene.min_objects = 1;
  cfg.scene.max_objects = 2;
  cfg.scene.min_object_size = 12;
  cfg.scene.max_object_size = 20;
  cfg.trainer.max_epochs = 2;
  cfg.scenes = scenes;
  cfg.seed = 5;
  cfg.out_dir = out;
  return cfg;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("map JSON round trips") {
  Rng rng(81);
  for (int n = 0; n < 50; ++n) {
    const std::size_t rows = uniform_int(rng, 1, 9), cols = uniform_int(rng, 1, 9);
    const EmphasisMap em = random_emphasis(rng, rows, cols);
    CHECK(emphasis_map_from_json(emphasis_map_to_json(em)) == em);
    QpMap qp(rows, cols);
    for (int& v : qp) v = uniform_int(rng, 0, kMaxQp);
    CHECK(qp_map_from_json(qp_map_to_json(qp)) == qp);
    const MbSsimGrid s = random_ssim(rng, rows, cols);
    CHECK(ssim_grid_from_json(ssim_grid_to_json(s)) == s);
  }
  Json bad = emphasis_map_to_json(EmphasisMap(2, 2, 1));
  bad["levels"][0] = 9;
  CHECK_THROWS(emphasis_map_from_json(bad));
  bad = qp_map_to_json(QpMap(2, 2, 30));
  bad["rows"] = 3;
  CHECK_THROWS(qp_map_from_json(bad));
}

TEST_CASE("read_map_file recognizes both map kinds") {
  const auto dir = temp_dir("maps");
  const EmphasisMap em(1, 2, std::vector<int>{0, 4});
  write_json_file(emphasis_map_to_json(em), dir / "em.json");
  const MapFile a = read_map_file(dir / "em.json");
  CHECK(a.is_emphasis);
  CHECK(a.emphasis == em);
  CHECK(a.as_qp() == QpMap(1, 2, std::vector<int>{45, 30}));

  write_json_file(qp_map_to_json(QpMap(1, 2, 33)), dir / "qp.json");
  const MapFile b = read_map_file(dir / "qp.json");
  CHECK_FALSE(b.is_emphasis);
  CHECK(b.as_qp() == QpMap(1, 2, 33));

  write_text_file("{\"rows\": 1", dir / "broken.json");
  try {
    read_map_file(dir / "broken.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
  }
  CHECK_THROWS_AS(read_map_file(dir / "missing.json"), IoError);
}

TEST_CASE("model JSON round trip preserves predictions") {
  Rng rng(82);
  LinearEAModel m;
  for (auto& w : m.params().weights) {
    for (double& v : w) v = 2 * uniform01(rng) - 1;
  }
  for (double& b : m.params().bias) b = uniform01(rng);
  for (double& s : m.params().norm.scale) s = 0.5 + uniform01(rng);
  for (double& s : m.params().norm.mean) s = uniform01(rng);
  const LinearEAModel back = model_from_json(model_to_json(m));
  CHECK(back.params().weights == m.params().weights);
  CHECK(back.params().bias == m.params().bias);
  CHECK(back.params().norm.mean == m.params().norm.mean);
  CHECK(back.params().norm.scale == m.params().norm.scale);
  CHECK(model_to_json(back).dump() == model_to_json(m).dump());
}

TEST_CASE("format_double round trips") {
  Rng rng(83);
  for (int n = 0; n < 1000; ++n) {
    const double v = std::ldexp(uniform01(rng) - 0.5, uniform_int(rng, -40, 40));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("run config JSON") {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.scenes = 7;
  cfg.interval = 3;
  cfg.trainer.tau = 0.05;
  cfg.variance_aq.direction = AqDirection::kTexturedLower;
  cfg.oracle = OracleKind::kEdgeRetention;
  cfg.sweep_split = SweepSplit::kAll;
  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(run_config_to_json(back).dump() == run_config_to_json(cfg).dump());
  CHECK(back.seed == 42);
  CHECK(back.trainer.tau == 0.05);
  CHECK(back.variance_aq.direction == AqDirection::kTexturedLower);

  const RunConfig defaults = run_config_from_json(Json::object());
  CHECK(defaults.scenes == 20);
  CHECK(defaults.variance_aq.direction == AqDirection::kFlatLower);

  CHECK_THROWS_AS(run_config_from_json(Json{{"scenez", 3}}), InvalidConfig);
  CHECK_THROWS_AS(run_config_from_json(Json{{"trainer", {{"lr", 1}}}}), InvalidConfig);
  CHECK_THROWS_AS(run_config_from_json(Json{{"oracle", "yolo"}}), InvalidConfig);
  CHECK_THROWS_AS(run_config_from_json(Json{{"sweep_split", "train"}}), InvalidConfig);
}

TEST_CASE("aggregates match a recomputation") {
  Rng rng(84);
  std::vector<SweepRow> rows;
  for (int i = 0; i < 40; ++i) {
    SweepRow r;
    r.scene_id = i / 2;
    r.method = i % 2 ? "uniform" : "emphasis";
    r.bits = uniform_int(rng, 100, 10000);
    r.acc_r = uniform01(rng);
    r.acc_c = uniform01(rng);
    r.feasible = std::abs(r.acc_c - r.acc_r) <= 0.3;
    r.mean_ssim = uniform01(rng);
    r.psnr = 30 + 10 * uniform01(rng);
    rows.push_back(r);
  }
  const auto aggs = aggregate_rows(rows);
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].method == "emphasis");
  for (const MethodAggregate& a : aggs) {
    std::int64_t bits = 0;
    double dacc = 0, feas = 0;
    int n = 0;
    for (const SweepRow& r : rows) {
      if (r.method != a.method) continue;
      bits += r.bits;
      dacc += std::abs(r.acc_c - r.acc_r);
      feas += r.feasible;
      ++n;
    }
    CHECK(a.frames == n);
    CHECK(a.total_bits == bits);
    CHECK(a.bitrate_bps == doctest::Approx(bits * 30.0 / n));
    CHECK(a.mean_abs_dacc == doctest::Approx(dacc / n));
    CHECK(a.feasible_fraction == doctest::Approx(feas / n));
  }
  const auto csv = lines(format_sweep_csv(rows, aggs));
  CHECK(csv.size() == 1 + rows.size() + aggs.size());
  CHECK(csv[0] ==
        "row_type,scene_id,frame,method,frames,bits,bitrate_bps,acc_r,acc_c,abs_dacc,feasible,"
        "mean_ssim,psnr_db,emphasis_sum");
}

TEST_CASE("heatmap geometry and colors") {
  MapFile zeros;
  zeros.is_emphasis = true;
  zeros.emphasis = EmphasisMap(2, 2, 0);
  const RgbImage a = render_heatmap(zeros);
  CHECK(a.width == 32);
  CHECK(a.height == 32 + kLegendGap + kLegendHeight);
  std::set<std::tuple<int, int, int>> body;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) body.insert({a.at(x, y).r, a.at(x, y).g, a.at(x, y).b});
  }
  CHECK(body.size() == 1);
  CHECK(a.at(0, 0) == ramp_color(0.0));

  MapFile two = zeros;
  two.emphasis = EmphasisMap(2, 2, std::vector<int>{0, 4, 4, 0});
  const RgbImage b = render_heatmap(two);
  CHECK(b.at(0, 0) == ramp_color(0.0));
  CHECK(b.at(20, 5) == ramp_color(1.0));
  CHECK(b.at(5, 20) == ramp_color(1.0));
  CHECK_FALSE(ramp_color(0.0) == ramp_color(1.0));

  const auto dir = temp_dir("heatmap");
  write_ppm(b, dir / "h.ppm");
  CHECK(fs::file_size(dir / "h.ppm") > static_cast<std::uintmax_t>(3 * b.width * b.height));
}

TEST_CASE("corpus generation, reload and determinism") {
  const auto dir = temp_dir("corpus");
  RunConfig cfg = tiny_run(dir / "a", 20);
  const auto frames = cmd_gen(cfg);
  CHECK(frames.size() == 20);
  int pgm = 0, json = 0;
  for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
    pgm += e.path().extension() == ".pgm";
    json += e.path().extension() == ".json";
  }
  CHECK(pgm == 20);
  CHECK(json == 20);
  const auto back = load_corpus(cfg.out_dir);
  REQUIRE(back.size() == 20);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].scene.frame == frames[i].scene.frame);
    CHECK(back[i].scene.gt_boxes == frames[i].scene.gt_boxes);
  }

  RunConfig again = cfg;
  again.out_dir = dir / "b";
  cmd_gen(again);
  for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
    CHECK(read_text_file(e.path()) == read_text_file(again.out_dir / e.path().filename()));
  }

  write_text_file("{not json", cfg.out_dir / "scene_003_f000.json");
  try {
    load_corpus(cfg.out_dir);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("scene_003_f000.json") != std::string::npos);
  }
  CHECK_THROWS_AS(load_corpus(dir / "nothing"), IoError);
}

TEST_CASE("scene split") {
  const Split s = split_scenes(20, 1);
  CHECK(s.train.size() == 14);
  CHECK(s.validation.size() == 4);
  CHECK(s.test.size() == 2);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 20);
  const Split again = split_scenes(20, 1);
  CHECK(again.train == s.train);
  const Split two = split_scenes(2, 1);
  CHECK(two.train.size() == 2);
  CHECK(two.test.size() == 2);
}

TEST_CASE("train, sweep, pet and ablate commands") {
  const auto dir = temp_dir("commands");
  RunConfig cfg = tiny_run(dir / "corpus", 6);
  cmd_gen(cfg);
  const fs::path corpus = cfg.out_dir;
  cfg.out_dir = dir / "run";

  const Json pet = cmd_pet(cfg, corpus);
  CHECK(fs::exists(cfg.out_dir / "pet.json"));
  CHECK_FALSE(pet.empty());

  RunConfig none = cfg;
  none.trainer.max_epochs = 0;
  try {
    cmd_train(none, corpus);
    FAIL("expected a config error");
  } catch (const InvalidConfig& e) {
    CHECK(std::string(e.what()).find("no training performed") != std::string::npos);
    CHECK(exit_code_for(e) == kExitConfig);
  }

  const TrainOutcome t = cmd_train(cfg, corpus);
  CHECK(fs::exists(cfg.out_dir / "model.json"));
  CHECK(lines(read_text_file(cfg.out_dir / "epoch_log.csv")).size() == t.result.log.size() + 1);

  CHECK_THROWS_AS(cmd_sweep(cfg, corpus, dir / "missing_model.json"), InvalidConfig);

  cfg.sweep_split = SweepSplit::kAll;
  const SweepOutcome s = cmd_sweep(cfg, corpus, cfg.out_dir / "model.json");
  REQUIRE(s.aggregates.size() == 4);
  std::set<std::string> methods;
  for (const auto& a : s.aggregates) {
    methods.insert(a.method);
    CHECK(a.frames == 6);
  }
  CHECK(methods == std::set<std::string>{"emphasis", "uniform", "binary_roi", "variance_aq"});
  CHECK(fs::exists(cfg.out_dir / "sweep.csv"));
  CHECK(fs::exists(cfg.out_dir / "summary.json"));
  CHECK(read_qp_matrix(cfg.out_dir / "qp_uniform.txt", 4, 4).size() == 6);

  const auto rows = cmd_ablate(cfg, corpus);
  CHECK(rows.size() == 50);
  CHECK(lines(format_ablation_csv(rows)).size() == 51);
}

TEST_CASE("encode and qpmatrix commands") {
  const auto dir = temp_dir("encode");
  const Scene s = generate_scene(85, SceneConfig{});
  write_pgm(s.frame, dir / "f.pgm");
  const MbGrid g = partition(s.frame);
  write_json_file(emphasis_map_to_json(uniform_emphasis(g, 2)), dir / "em.json");
  const Json info = cmd_encode(dir / "f.pgm", dir / "em.json", dir / "out");
  CHECK(read_pgm(dir / "out" / "recon.pgm") == encode_frame(s.frame, uniform_qp(g, 37)).recon);
  CHECK(fs::exists(dir / "out" / "encode.json"));
  CHECK_FALSE(info.empty());

  write_json_file(qp_map_to_json(uniform_qp(g, 40)), dir / "qp.json");
  cmd_qpmatrix({dir / "em.json", dir / "qp.json"}, dir / "m.txt");
  const auto m = read_qp_matrix(dir / "m.txt", g.rows, g.cols);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == uniform_qp(g, 37));
  CHECK(m[1] == uniform_qp(g, 40));

  write_json_file(qp_map_to_json(QpMap(2, 2, 30)), dir / "small.json");
  CHECK_THROWS(cmd_encode(dir / "f.pgm", dir / "small.json", dir / "out2"));
}

TEST_CASE("exit codes by error type") {
  CHECK(exit_code_for(InvalidConfig("x")) == kExitConfig);
  CHECK(exit_code_for(InvalidInput("x")) == kExitConfig);
  CHECK(exit_code_for(IoError("x")) == kExitIo);
  CHECK(exit_code_for(ParseError("x")) == kExitIo);
  CHECK(exit_code_for(TrainingError("x", {})) == kExitTraining);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitFailure);
}
