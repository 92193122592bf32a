#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mbaq/config.hpp"
#include "mbaq/corpus.hpp"
#include "mbaq/report.hpp"
#include "mbaq/rer.hpp"

namespace mbaq {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitIo = 4,
  kExitTraining = 5,
};

// Maps the library's exception types to exit codes.
int exit_code_for(const std::exception& e);

// Writes the generated corpus into cfg.out_dir.
std::vector<CorpusFrame> cmd_gen(const RunConfig& cfg);

// Per-scene PET thresholds (first frame of each scene) into pet.json.
Json cmd_pet(const RunConfig& cfg, const std::filesystem::path& corpus_dir);

struct TrainOutcome {
  LinearEAModel model;
  TrainResult result;
  Split split;
};

// Trains on the train split and stops on the validation split; writes
// model.json and epoch_log.csv. The log is written even when training fails.
TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& corpus_dir);

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::vector<MethodAggregate> aggregates;
};

// Learned assignment plus the enabled baselines on the configured split;
// writes sweep.csv, summary.json and qp_<method>.txt.
SweepOutcome cmd_sweep(const RunConfig& cfg, const std::filesystem::path& corpus_dir,
                       const std::filesystem::path& model_path);

void cmd_heatmap(const std::filesystem::path& map_path, const std::filesystem::path& out_path);

struct AblationRow {
  std::string variant;  // "rer" or "no_rer"
  double p_decay = 0.0;
  int interval = 1;
  double mean_bits = 0.0;
  double normalized_bits = 0.0;  // relative to the uniform-QP search
  double mean_abs_dacc = 0.0;
  double feasible_fraction = 0.0;
  int epochs = 0;
  bool converged = false;
};

inline constexpr double kAblationDecays[] = {0.1, 0.15, 0.2, 0.25, 0.3};
inline constexpr int kAblationMaxInterval = 5;

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::filesystem::path& corpus_dir);
std::string format_ablation_csv(const std::vector<AblationRow>& rows);

// Encodes one PGM frame with a map file; writes recon.pgm and encode.json.
Json cmd_encode(const std::filesystem::path& frame_path, const std::filesystem::path& map_path,
                const std::filesystem::path& out_dir);

// Map files in order, one QP-matrix line each.
void cmd_qpmatrix(const std::vector<std::filesystem::path>& map_paths,
                  const std::filesystem::path& out_path);

// Shared evaluation used by sweep and ablate. Learned predictions are reused
// for `interval` frames of a scene.
struct MethodEvaluation {
  std::vector<SweepRow> rows;
  // Per method, one QP map per evaluated frame.
  std::vector<std::pair<std::string, std::vector<QpMap>>> qp_maps;
  std::vector<EmphasisMap> learned_maps;
};

MethodEvaluation evaluate_methods(const std::vector<PreparedFrame>& frames,
                                  const std::vector<int>& frame_indices, const EAModel* model,
                                  const RunConfig& cfg, const AccuracyOracle& oracle,
                                  bool with_baselines);

std::vector<PreparedFrame> prepare_corpus(const std::vector<CorpusFrame>& frames,
                                          const AccuracyOracle& oracle, const TrainerConfig& cfg);

}  // namespace mbaq
