#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbaq/commands.hpp"
#include "mbaq/config.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> interval;
  std::optional<double> tau;
  std::optional<mbaq::AqDirection> aq_direction;
};

mbaq::RunConfig resolve_config(const GlobalFlags& flags) {
  mbaq::RunConfig cfg = flags.config.empty() ? mbaq::RunConfig{} : mbaq::load_run_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.interval) cfg.interval = *flags.interval;
  if (flags.tau) cfg.trainer.tau = *flags.tau;
  if (flags.aq_direction) cfg.variance_aq.direction = *flags.aq_direction;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Macroblock emphasis assignment: scene generation, training and rate sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Run seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--interval", flags.interval, "Re-run emphasis prediction every K frames")
      ->check(CLI::PositiveNumber);
  app.add_option("--tau", flags.tau, "Accuracy margin")->check(CLI::NonNegativeNumber);
  const std::map<std::string, mbaq::AqDirection> directions{
      {"flat_lower", mbaq::AqDirection::kFlatLower},
      {"textured_lower", mbaq::AqDirection::kTexturedLower}};
  app.add_option("--aq-direction", flags.aq_direction,
                 "Variance AQ sign: flat_lower (default) or textured_lower")
      ->transform(CLI::CheckedTransformer(directions, CLI::ignore_case));

  std::string corpus, model, map_path, image, frame_path, matrix_path, split;
  std::vector<std::string> maps;
  std::optional<int> scenes, frames;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic scene corpus into --out");
  gen->add_option("--scenes", scenes, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--frames", frames, "Frames per scene")->check(CLI::PositiveNumber);

  auto* pet = app.add_subcommand("pet", "Per-scene SSIM percentile thresholds");
  pet->add_option("--corpus", corpus, "Corpus directory")->required();

  auto* trn = app.add_subcommand("train", "Train the emphasis model");
  trn->add_option("--corpus", corpus, "Corpus directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Compare the learned assignment with the baselines");
  sweep->add_option("--corpus", corpus, "Corpus directory")->required();
  sweep->add_option("--model", model, "Model JSON from train")->required();
  sweep->add_option("--split", split, "Scenes to evaluate: test or all")
      ->check(CLI::IsMember({"test", "all"}));

  auto* heat = app.add_subcommand("heatmap", "Render an emphasis or QP map as a PPM image");
  heat->add_option("--map", map_path, "Map JSON")->required();
  heat->add_option("--image", image, "Output image (default <out>/heatmap.ppm)");

  auto* ablate = app.add_subcommand("ablate", "RER / decay / interval ablation grid");
  ablate->add_option("--corpus", corpus, "Corpus directory")->required();

  auto* enc = app.add_subcommand("encode", "Encode a PGM frame with a map");
  enc->add_option("--frame", frame_path, "Input PGM")->required();
  enc->add_option("--map", map_path, "Map JSON")->required();

  auto* qpm = app.add_subcommand("qpmatrix", "Write map JSON files as a QP-matrix text file");
  qpm->add_option("--map", maps, "Map JSON, one per frame, in order")->required();
  qpm->add_option("--file", matrix_path, "Output file (default <out>/qp_matrix.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? mbaq::kExitOk : mbaq::kExitUsage;
  }

  try {
    mbaq::RunConfig cfg = resolve_config(flags);
    if (gen->parsed()) {
      if (scenes) cfg.scenes = *scenes;
      if (frames) cfg.frames_per_scene = *frames;
      const auto written = mbaq::cmd_gen(cfg);
      std::cout << "wrote " << written.size() << " frames to " << cfg.out_dir.string() << "\n";
    } else if (pet->parsed()) {
      mbaq::cmd_pet(cfg, corpus);
      std::cout << "wrote " << (cfg.out_dir / "pet.json").string() << "\n";
    } else if (trn->parsed()) {
      const auto out = mbaq::cmd_train(cfg, corpus);
      const auto& log = out.result.log;
      std::cout << "epochs " << out.result.epochs_run << (out.result.converged ? " converged" : "")
                << ", validation |dacc| " << (log.empty() ? 0.0 : log.back().val_abs_dacc) << "\n";
    } else if (sweep->parsed()) {
      if (split == "all") cfg.sweep_split = mbaq::SweepSplit::kAll;
      if (split == "test") cfg.sweep_split = mbaq::SweepSplit::kTest;
      const auto out = mbaq::cmd_sweep(cfg, corpus, model);
      for (const auto& a : out.aggregates) {
        std::cout << a.method << ": mean bits " << a.mean_bits << ", mean |dacc| " << a.mean_abs_dacc
                  << ", feasible " << a.feasible_fraction << "\n";
      }
    } else if (heat->parsed()) {
      const std::filesystem::path target = image.empty() ? cfg.out_dir / "heatmap.ppm" : std::filesystem::path(image);
      if (image.empty()) std::filesystem::create_directories(cfg.out_dir);
      mbaq::cmd_heatmap(map_path, target);
      std::cout << "wrote " << target.string() << "\n";
    } else if (ablate->parsed()) {
      const auto rows = mbaq::cmd_ablate(cfg, corpus);
      std::cout << "wrote " << rows.size() << " rows to " << (cfg.out_dir / "ablation.csv").string() << "\n";
    } else if (enc->parsed()) {
      const auto doc = mbaq::cmd_encode(frame_path, map_path, cfg.out_dir);
      std::cout << "total bits " << doc["total_bits"].get<long long>() << "\n";
    } else if (qpm->parsed()) {
      const std::filesystem::path target = matrix_path.empty() ? cfg.out_dir / "qp_matrix.txt" : std::filesystem::path(matrix_path);
      if (matrix_path.empty()) std::filesystem::create_directories(cfg.out_dir);
      std::vector<std::filesystem::path> paths(maps.begin(), maps.end());
      mbaq::cmd_qpmatrix(paths, target);
      std::cout << "wrote " << target.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mbaq::exit_code_for(e);
  }
  return mbaq::kExitOk;
}
