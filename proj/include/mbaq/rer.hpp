#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbaq/codec.hpp"
#include "mbaq/oracle.hpp"
#include "mbaq/pet.hpp"
#include "mbaq/quality.hpp"
#include "mbaq/rng.hpp"
#include "mbaq/scene.hpp"

namespace mbaq {

// ---------------------------------------------------------------------------
// Features and the emphasis assignment model

inline constexpr int kNumFeatures = 6;

// mean/255, variance/255^2, gradient energy/255, low-quality SSIM,
// normalized row, normalized column.
using FeatureVector = std::array<double, kNumFeatures>;
struct FeatureTag {};
using FeatureGrid = Grid<FeatureVector, FeatureTag>;

using LevelProbs = std::array<double, kNumLevels>;
struct ProbsTag {};
using ProbGrid = Grid<LevelProbs, ProbsTag>;

FeatureGrid extract_features(const Frame& frame, const MbSsimGrid& ssim_low);

// Index of the largest probability; ties resolve to the lower level.
int argmax_level(const LevelProbs& probs);
EmphasisMap argmax_map(const ProbGrid& probs);

class EAModel {
 public:
  virtual ~EAModel() = default;
  // Per-macroblock distribution over the five emphasis levels.
  virtual ProbGrid predict(const FeatureGrid& features) const = 0;
  // Descends along dLoss/dlogits for the batch that produced `features`.
  virtual void apply_gradient(const FeatureGrid& features, const ProbGrid& logit_grads,
                              double learning_rate) = 0;
  virtual std::unique_ptr<EAModel> clone() const = 0;
  // Copies the state of a model of the same concrete type.
  virtual void restore(const EAModel& snapshot) = 0;
};

// Feature standardization applied before the linear layer.
struct FeatureNorm {
  FeatureVector mean{};
  FeatureVector scale{1, 1, 1, 1, 1, 1};

  static FeatureNorm fit(std::span<const FeatureGrid> grids);
};

// Multinomial logistic regression over standardized features, trained with
// AdamW.
class LinearEAModel final : public EAModel {
 public:
  struct Params {
    std::array<FeatureVector, kNumLevels> weights{};
    LevelProbs bias{};
    FeatureNorm norm;
  };

  LinearEAModel() = default;
  explicit LinearEAModel(Params params) : params_(params) {}

  ProbGrid predict(const FeatureGrid& features) const override;
  void apply_gradient(const FeatureGrid& features, const ProbGrid& logit_grads,
                      double learning_rate) override;
  std::unique_ptr<EAModel> clone() const override;
  void restore(const EAModel& snapshot) override;

  LevelProbs logits(const FeatureVector& f) const;
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  void set_norm(const FeatureNorm& norm) { params_.norm = norm; }
  void reset_optimizer() { adam_ = {}; }

  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;

 private:
  struct AdamState {
    std::array<FeatureVector, kNumLevels> mw{}, vw{};
    LevelProbs mb{}, vb{};
    long long step = 0;
  };
  Params params_;
  AdamState adam_;
};

LevelProbs softmax(const LevelProbs& logits);

// ---------------------------------------------------------------------------
// Region-aware dual exploration

// Moves from `anchor` toward `bound` by k in {1..|bound-anchor|} steps with
// P(k) proportional to r^(k-1). Returns anchor when they coincide.
int exponential_sample(int anchor, int bound, double r, Rng& rng);

struct ProxyTag {};
using ProxyTarget = Grid<int, ProxyTag>;

enum class ProxyMode {
  kRegionAware,      // RoI explores upward, BG downward
  kUniformDownward,  // every macroblock routed as background (ablation)
};

// One uniform draw per macroblock in row-major order, then sampler draws as
// needed, so the stream is reproducible from the seed.
ProxyTarget build_proxy_target(const EmphasisMap& em, const RegionMap& regions,
                               const MbSsimGrid& ssim_low, const PetThresholds& thr, double p,
                               Rng& rng, double sampler_r = 0.5,
                               ProxyMode mode = ProxyMode::kRegionAware);

// ---------------------------------------------------------------------------
// Loss and training

enum class GradientMode {
  kAlignmentOnly,    // accuracy term is logged, not differentiated
  kAccuracyScaled,   // alignment gradient scaled by (1 + loss1)
};

struct TrainerConfig {
  double p0 = 0.8;
  double p_decay = 0.1;
  double lambda1 = 10.0;
  double lambda2 = 5.0;
  std::array<double, kNumLevels> penalty{1.0, 1.3, 1.6, 1.9, 2.2};
  double lr_max = 1e-3;
  double lr_min = 1e-6;
  double tau = 0.02;
  int max_epochs = 12;
  double sampler_r = 0.5;
  double pct_roi = 0.9;
  double pct_bg = 0.5;
  std::uint64_t seed = 1;
  GradientMode gradient_mode = GradientMode::kAlignmentOnly;
  ProxyMode proxy_mode = ProxyMode::kRegionAware;
  // Thresholds from the first frame of the whole corpus instead of the first
  // frame of each scene.
  bool share_thresholds = false;
  // Relative change of validation mean emphasis treated as a plateau.
  double plateau_rel = 0.01;
  // Keep the epoch with the lowest validation mean emphasis among those
  // within tau, instead of the last one.
  bool select_best = true;

  void validate() const;
  double learning_rate(int epoch) const;
};

struct LossResult {
  double loss = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  ProbGrid logit_grads;
};

LossResult rer_loss(const ProbGrid& pred, const ProxyTarget& proxy, double acc_r, double acc_c,
                    const TrainerConfig& cfg);

// A frame with everything the trainer needs precomputed once.
struct PreparedFrame {
  Scene scene;
  std::size_t scene_id = 0;
  MbGrid grid;
  RegionMap regions;
  MbSsimGrid ssim_low;
  FeatureGrid features;
  std::shared_ptr<const LevelCache> cache;
  double acc_r = 0.0;
  PetThresholds thresholds;
};

// Frames sharing a scene_id take PET thresholds from the first of them.
std::vector<PreparedFrame> prepare_frames(const std::vector<Scene>& scenes,
                                          const std::vector<std::size_t>& scene_ids,
                                          const AccuracyOracle& oracle, const TrainerConfig& cfg,
                                          const EmphasisTable& table = {});

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double acc_c = 0.0;
  double acc_r = 0.0;
  double p = 0.0;
  double mean_emphasis = 0.0;
  double lr = 0.0;
  double val_abs_dacc = 0.0;
  double val_mean_emphasis = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool converged = false;
  int epochs_run = 0;
  // Epoch whose parameters the model holds on return.
  int selected_epoch = -1;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<EpochLog> log)
      : std::runtime_error(what), log_(std::move(log)) {}
  const std::vector<EpochLog>& log() const { return log_; }

 private:
  std::vector<EpochLog> log_;
};

struct ValidationStats {
  double mean_abs_dacc = 0.0;
  double mean_emphasis = 0.0;
};

ValidationStats validate_model(const EAModel& model, const std::vector<PreparedFrame>& frames,
                               const AccuracyOracle& oracle);

// Runs the exploration loop on `train` and stops on `validation`. The model
// is updated in place; a LinearEAModel gets its feature normalization fitted
// on the training frames first.
TrainResult train(EAModel& model, const std::vector<PreparedFrame>& train_frames,
                  const std::vector<PreparedFrame>& validation_frames,
                  const AccuracyOracle& oracle, const TrainerConfig& cfg);

// Convenience: trains a fresh LinearEAModel on the corpus, validating on the
// corpus itself.
std::pair<LinearEAModel, TrainResult> train(const std::vector<Scene>& corpus,
                                            const AccuracyOracle& oracle,
                                            const TrainerConfig& cfg);

// Fixed proxy targets, no exploration; used to check loss contraction.
std::vector<double> fit_frozen_targets(LinearEAModel& model, const std::vector<FeatureGrid>& features,
                                       const std::vector<ProxyTarget>& targets,
                                       const TrainerConfig& cfg, int epochs, double lr);

// ---------------------------------------------------------------------------
// Objective evaluation

struct ObjectiveResult {
  bool feasible = false;
  long long emphasis_sum = 0;
  double acc_c = 0.0;
  double acc_r = 0.0;
  std::int64_t bits = 0;
};

ObjectiveResult evaluate_objective(const EmphasisMap& em, const Scene& scene,
                                   const AccuracyOracle& oracle, double tau,
                                   const EmphasisTable& table = {});

struct BruteForceResult {
  bool feasible = false;
  EmphasisMap em;
  long long emphasis_sum = 0;
  // Accuracy of the returned map; when infeasible, the map closest to the
  // reference accuracy.
  double acc_c = 0.0;
  double acc_r = 0.0;
  long long evaluated = 0;
};

inline constexpr int kBruteForceMaxMbs = 9;

// Exhaustive search for the minimum-sum feasible map, by increasing sum and
// row-major lexicographic order within a sum.
BruteForceResult brute_force_optimum(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                     const EmphasisTable& table = {});

}  // namespace mbaq
