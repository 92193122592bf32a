#include "mbaq/rer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace mbaq {

// ---------------------------------------------------------------------------
// Features

FeatureGrid extract_features(const Frame& frame, const MbSsimGrid& ssim_low) {
  const MbGrid grid = partition(frame);
  if (ssim_low.rows() != static_cast<std::size_t>(grid.rows) ||
      ssim_low.cols() != static_cast<std::size_t>(grid.cols)) {
    throw InvalidInput("SSIM grid shape does not match the frame");
  }
  const Frame padded = pad_to_macroblocks(frame);
  FeatureGrid out(grid.rows, grid.cols);
  constexpr double kPixels = kMbSize * kMbSize;
  constexpr double kPairs = kMbSize * (kMbSize - 1);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int x0 = c * kMbSize;
      const int y0 = r * kMbSize;
      double sum = 0.0, sum_sq = 0.0, grad_h = 0.0, grad_v = 0.0;
      for (int y = 0; y < kMbSize; ++y) {
        for (int x = 0; x < kMbSize; ++x) {
          const double v = padded.at(x0 + x, y0 + y);
          sum += v;
          sum_sq += v * v;
          if (x + 1 < kMbSize) grad_h += std::abs(padded.at(x0 + x + 1, y0 + y) - v);
          if (y + 1 < kMbSize) grad_v += std::abs(padded.at(x0 + x, y0 + y + 1) - v);
        }
      }
      const double mean = sum / kPixels;
      const double var = std::max(0.0, sum_sq / kPixels - mean * mean);
      FeatureVector& f = out(r, c);
      f[0] = mean / 255.0;
      f[1] = var / (255.0 * 255.0);
      f[2] = (grad_h / kPairs + grad_v / kPairs) / 255.0;
      f[3] = ssim_low(r, c);
      f[4] = (r + 0.5) / grid.rows;
      f[5] = (c + 0.5) / grid.cols;
    }
  }
  return out;
}

int argmax_level(const LevelProbs& probs) {
  int best = 0;
  for (int l = 1; l < kNumLevels; ++l) {
    if (probs[l] > probs[best]) best = l;
  }
  return best;
}

EmphasisMap argmax_map(const ProbGrid& probs) {
  EmphasisMap em(probs.rows(), probs.cols(), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) em[i] = argmax_level(probs[i]);
  return em;
}

LevelProbs softmax(const LevelProbs& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  LevelProbs p{};
  double total = 0.0;
  for (int l = 0; l < kNumLevels; ++l) {
    p[l] = std::exp(logits[l] - mx);
    total += p[l];
  }
  for (double& v : p) v /= total;
  return p;
}

FeatureNorm FeatureNorm::fit(std::span<const FeatureGrid> grids) {
  FeatureNorm norm;
  std::size_t n = 0;
  FeatureVector sum{}, sum_sq{};
  for (const FeatureGrid& g : grids) {
    for (const FeatureVector& f : g) {
      for (int k = 0; k < kNumFeatures; ++k) {
        sum[k] += f[k];
        sum_sq[k] += f[k] * f[k];
      }
      ++n;
    }
  }
  if (n == 0) return norm;
  for (int k = 0; k < kNumFeatures; ++k) {
    norm.mean[k] = sum[k] / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq[k] / static_cast<double>(n) - norm.mean[k] * norm.mean[k]);
    // cancellation leaves ulp-level variance on constant features
    norm.scale[k] = var > 1e-12 * (1.0 + norm.mean[k] * norm.mean[k]) ? std::sqrt(var) : 1.0;
  }
  return norm;
}

LevelProbs LinearEAModel::logits(const FeatureVector& f) const {
  FeatureVector z{};
  for (int k = 0; k < kNumFeatures; ++k) z[k] = (f[k] - params_.norm.mean[k]) / params_.norm.scale[k];
  LevelProbs out{};
  for (int l = 0; l < kNumLevels; ++l) {
    double s = params_.bias[l];
    for (int k = 0; k < kNumFeatures; ++k) s += params_.weights[l][k] * z[k];
    out[l] = s;
  }
  return out;
}

ProbGrid LinearEAModel::predict(const FeatureGrid& features) const {
  ProbGrid out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.size(); ++i) out[i] = softmax(logits(features[i]));
  return out;
}

void LinearEAModel::apply_gradient(const FeatureGrid& features, const ProbGrid& logit_grads,
                                   double learning_rate) {
  if (!features.same_shape(logit_grads)) throw InvalidInput("gradient shape does not match features");
  std::array<FeatureVector, kNumLevels> gw{};
  LevelProbs gb{};
  for (std::size_t i = 0; i < features.size(); ++i) {
    FeatureVector z{};
    for (int k = 0; k < kNumFeatures; ++k) {
      z[k] = (features[i][k] - params_.norm.mean[k]) / params_.norm.scale[k];
    }
    for (int l = 0; l < kNumLevels; ++l) {
      const double g = logit_grads[i][l];
      gb[l] += g;
      for (int k = 0; k < kNumFeatures; ++k) gw[l][k] += g * z[k];
    }
  }
  ++adam_.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_.step));
  constexpr double kEps = 1e-8;
  auto update = [&](double& w, double g, double& m, double& v, bool decay) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    if (decay) w -= learning_rate * weight_decay * w;
    w -= learning_rate * (m / c1) / (std::sqrt(v / c2) + kEps);
  };
  for (int l = 0; l < kNumLevels; ++l) {
    for (int k = 0; k < kNumFeatures; ++k) {
      update(params_.weights[l][k], gw[l][k], adam_.mw[l][k], adam_.vw[l][k], true);
    }
    update(params_.bias[l], gb[l], adam_.mb[l], adam_.vb[l], false);
  }
}

std::unique_ptr<EAModel> LinearEAModel::clone() const {
  return std::make_unique<LinearEAModel>(*this);
}

void LinearEAModel::restore(const EAModel& snapshot) {
  const auto* other = dynamic_cast<const LinearEAModel*>(&snapshot);
  if (!other) throw InvalidInput("snapshot is not a linear model");
  *this = *other;
}

// ---------------------------------------------------------------------------
// Exploration

int exponential_sample(int anchor, int bound, double r, Rng& rng) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidConfig("sampler decay r must lie in (0,1)");
  if (anchor < 0 || anchor >= kNumLevels || bound < 0 || bound >= kNumLevels) {
    throw InvalidInput("sampler levels outside [0,4]");
  }
  if (anchor == bound) return anchor;
  const int span = std::abs(bound - anchor);
  const int dir = bound > anchor ? 1 : -1;
  // total weight of the truncated geometric law
  const double total = (1.0 - std::pow(r, span)) / (1.0 - r);
  double u = uniform01(rng) * total;
  double w = 1.0;
  for (int k = 1; k <= span; ++k) {
    if (u < w || k == span) return anchor + dir * k;
    u -= w;
    w *= r;
  }
  return bound;
}

ProxyTarget build_proxy_target(const EmphasisMap& em, const RegionMap& regions,
                               const MbSsimGrid& ssim_low, const PetThresholds& thr, double p,
                               Rng& rng, double sampler_r, ProxyMode mode) {
  if (!em.same_shape(regions) || !em.same_shape(ssim_low)) {
    throw InvalidInput("proxy inputs differ in shape");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("exploration probability outside [0,1]");
  ProxyTarget proxy(em.rows(), em.cols(), 0);
  for (std::size_t i = 0; i < em.size(); ++i) {
    const int level = std::clamp(em[i], 0, kNumLevels - 1);
    const bool explore = uniform01(rng) < p;
    const bool roi = mode == ProxyMode::kRegionAware && regions[i] == Region::kRoi;
    int target;
    if (roi) {
      target = (explore && ssim_low[i] <= thr.t_roi)
                   ? exponential_sample(level, kNumLevels - 1, sampler_r, rng)
                   : level;
    } else {
      target = (explore && ssim_low[i] >= thr.t_bg) ? exponential_sample(level, 0, sampler_r, rng)
                                                    : std::max(level - 1, 0);
    }
    proxy[i] = std::clamp(target, 0, kNumLevels - 1);
  }
  return proxy;
}

// ---------------------------------------------------------------------------
// Loss

void TrainerConfig::validate() const {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw InvalidConfig("p0 must lie in [0,1]");
  if (p_decay < 0.0) throw InvalidConfig("p_decay must be non-negative");
  if (tau < 0.0) throw InvalidConfig("tau must be non-negative");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw InvalidConfig("loss weights must be non-negative");
  for (int l = 0; l < kNumLevels; ++l) {
    if (!(penalty[l] > 0.0)) throw InvalidConfig("penalty factors must be positive");
    if (l > 0 && !(penalty[l] > penalty[l - 1])) {
      throw InvalidConfig("penalty must be strictly increasing");
    }
  }
  if (!(sampler_r > 0.0 && sampler_r < 1.0)) throw InvalidConfig("sampler r must lie in (0,1)");
  if (!(pct_roi >= 0.0 && pct_roi <= 1.0 && pct_bg >= 0.0 && pct_bg <= 1.0)) {
    throw InvalidConfig("PET percentiles must lie in [0,1]");
  }
  if (max_epochs < 0) throw InvalidConfig("max_epochs must be non-negative");
  if (!(lr_max > 0.0) || lr_min < 0.0 || lr_min > lr_max) throw InvalidConfig("bad learning-rate range");
}

double TrainerConfig::learning_rate(int epoch) const {
  if (max_epochs <= 1) return lr_max;
  const double t = std::clamp(static_cast<double>(epoch) / (max_epochs - 1), 0.0, 1.0);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

LossResult rer_loss(const ProbGrid& pred, const ProxyTarget& proxy, double acc_r, double acc_c,
                    const TrainerConfig& cfg) {
  if (!pred.same_shape(proxy)) throw InvalidInput("prediction and proxy differ in shape");
  LossResult out;
  out.loss1 = std::abs(acc_c - acc_r);
  out.logit_grads = ProbGrid(pred.rows(), pred.cols());
  const double m = static_cast<double>(pred.size());
  if (pred.empty()) {
    out.loss = cfg.lambda1 * out.loss1;
    return out;
  }
  const double scale = cfg.gradient_mode == GradientMode::kAccuracyScaled ? 1.0 + out.loss1 : 1.0;
  double ce = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int target = proxy[i];
    if (target < 0 || target >= kNumLevels) throw InvalidInput("proxy level outside [0,4]");
    const double w = cfg.penalty[target];
    ce += w * -std::log(std::max(pred[i][target], std::numeric_limits<double>::min()));
    for (int l = 0; l < kNumLevels; ++l) {
      out.logit_grads[i][l] =
          scale * cfg.lambda2 * w * (pred[i][l] - (l == target ? 1.0 : 0.0)) / m;
    }
  }
  out.loss2 = ce / m;
  out.loss = cfg.lambda1 * out.loss1 + cfg.lambda2 * out.loss2;
  return out;
}

// ---------------------------------------------------------------------------
// Training

std::vector<PreparedFrame> prepare_frames(const std::vector<Scene>& scenes,
                                          const std::vector<std::size_t>& scene_ids,
                                          const AccuracyOracle& oracle, const TrainerConfig& cfg,
                                          const EmphasisTable& table) {
  if (scenes.size() != scene_ids.size()) throw InvalidInput("one scene id per frame required");
  std::vector<PreparedFrame> out;
  out.reserve(scenes.size());
  std::optional<PetThresholds> shared;
  std::size_t current_id = std::numeric_limits<std::size_t>::max();
  PetThresholds current{};
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    PreparedFrame pf;
    pf.scene = scenes[k];
    pf.scene_id = scene_ids[k];
    pf.grid = partition(pf.scene.frame);
    pf.regions = classify_regions(pf.grid, pf.scene.gt_boxes);
    pf.cache = std::make_shared<LevelCache>(pf.scene.frame, table);
    const Frame low = pf.cache->crop_padded(pf.cache->padded_recon(0));
    pf.ssim_low = per_mb_ssim(pf.scene.frame, low);
    pf.features = extract_features(pf.scene.frame, pf.ssim_low);
    pf.acc_r = oracle.score_in(pf.scene, pf.scene.frame);
    if (cfg.share_thresholds) {
      if (!shared) shared = proxy_emphasis_threshold(pf.ssim_low, cfg.pct_roi, cfg.pct_bg);
      pf.thresholds = *shared;
    } else {
      if (pf.scene_id != current_id) {
        current_id = pf.scene_id;
        current = proxy_emphasis_threshold(pf.ssim_low, cfg.pct_roi, cfg.pct_bg);
      }
      pf.thresholds = current;
    }
    out.push_back(std::move(pf));
  }
  return out;
}

ValidationStats validate_model(const EAModel& model, const std::vector<PreparedFrame>& frames,
                               const AccuracyOracle& oracle) {
  ValidationStats stats;
  if (frames.empty()) return stats;
  Frame padded;
  for (const PreparedFrame& pf : frames) {
    const EmphasisMap em = argmax_map(model.predict(pf.features));
    pf.cache->compose(em, padded);
    const double acc_c = oracle.score_in(pf.scene, pf.cache->crop_padded(padded));
    stats.mean_abs_dacc += std::abs(acc_c - pf.acc_r);
    stats.mean_emphasis += static_cast<double>(emphasis_sum(em)) / static_cast<double>(em.size());
  }
  stats.mean_abs_dacc /= static_cast<double>(frames.size());
  stats.mean_emphasis /= static_cast<double>(frames.size());
  return stats;
}

TrainResult train(EAModel& model, const std::vector<PreparedFrame>& train_frames,
                  const std::vector<PreparedFrame>& validation_frames,
                  const AccuracyOracle& oracle, const TrainerConfig& cfg) {
  cfg.validate();
  if (train_frames.empty()) throw InvalidInput("training corpus is empty");
  if (auto* linear = dynamic_cast<LinearEAModel*>(&model)) {
    std::vector<FeatureGrid> grids;
    grids.reserve(train_frames.size());
    for (const PreparedFrame& pf : train_frames) grids.push_back(pf.features);
    linear->set_norm(FeatureNorm::fit(grids));
    linear->reset_optimizer();
  }
  const std::vector<PreparedFrame>& val = validation_frames.empty() ? train_frames : validation_frames;

  TrainResult result;
  std::vector<std::size_t> order(train_frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Frame padded;
  int feasible_streak = 0;
  std::unique_ptr<EAModel> best;
  int best_epoch = -1;
  double best_emphasis = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochLog row;
    row.epoch = epoch;
    row.p = std::max(cfg.p0 - cfg.p_decay * epoch, 0.0);
    row.lr = cfg.learning_rate(epoch);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t idx : order) {
      const PreparedFrame& pf = train_frames[idx];
      Rng frame_rng(derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1), idx));
      const ProbGrid probs = model.predict(pf.features);
      const EmphasisMap em = argmax_map(probs);
      const ProxyTarget proxy = build_proxy_target(em, pf.regions, pf.ssim_low, pf.thresholds, row.p,
                                                   frame_rng, cfg.sampler_r, cfg.proxy_mode);
      pf.cache->compose(em, padded);
      const double acc_c = oracle.score_in(pf.scene, pf.cache->crop_padded(padded));
      const LossResult loss = rer_loss(probs, proxy, pf.acc_r, acc_c, cfg);
      if (!std::isfinite(loss.loss)) {
        result.log.push_back(row);
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch), result.log);
      }
      model.apply_gradient(pf.features, loss.logit_grads, row.lr);
      row.loss += loss.loss;
      row.loss1 += loss.loss1;
      row.loss2 += loss.loss2;
      row.acc_c += acc_c;
      row.acc_r += pf.acc_r;
      row.mean_emphasis += static_cast<double>(emphasis_sum(em)) / static_cast<double>(em.size());
    }
    const double n = static_cast<double>(train_frames.size());
    row.loss /= n;
    row.loss1 /= n;
    row.loss2 /= n;
    row.acc_c /= n;
    row.acc_r /= n;
    row.mean_emphasis /= n;

    const ValidationStats vs = validate_model(model, val, oracle);
    row.val_abs_dacc = vs.mean_abs_dacc;
    row.val_mean_emphasis = vs.mean_emphasis;
    // "stopped decreasing": the drop since the previous epoch is below
    // plateau_rel of its value; a rise also counts
    const bool plateau =
        !result.log.empty() &&
        result.log.back().val_mean_emphasis - vs.mean_emphasis <
            cfg.plateau_rel * std::abs(result.log.back().val_mean_emphasis);
    result.log.push_back(row);
    result.epochs_run = epoch + 1;
    result.selected_epoch = epoch;
    if (cfg.select_best && vs.mean_abs_dacc <= cfg.tau && vs.mean_emphasis < best_emphasis) {
      best_emphasis = vs.mean_emphasis;
      best = model.clone();
      best_epoch = epoch;
    }
    feasible_streak = vs.mean_abs_dacc <= cfg.tau ? feasible_streak + 1 : 0;
    if (feasible_streak >= 2 && plateau) {
      result.converged = true;
      break;
    }
  }
  if (best) {
    model.restore(*best);
    result.selected_epoch = best_epoch;
  }
  return result;
}

std::pair<LinearEAModel, TrainResult> train(const std::vector<Scene>& corpus,
                                            const AccuracyOracle& oracle,
                                            const TrainerConfig& cfg) {
  std::vector<std::size_t> ids(corpus.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const auto frames = prepare_frames(corpus, ids, oracle, cfg);
  LinearEAModel model;
  TrainResult result = train(model, frames, {}, oracle, cfg);
  return {std::move(model), std::move(result)};
}

std::vector<double> fit_frozen_targets(LinearEAModel& model, const std::vector<FeatureGrid>& features,
                                       const std::vector<ProxyTarget>& targets,
                                       const TrainerConfig& cfg, int epochs, double lr) {
  if (features.size() != targets.size()) throw InvalidInput("one target per feature grid required");
  std::vector<double> losses;
  auto& params = model.params();
  for (int epoch = 0; epoch <= epochs; ++epoch) {
    // full-batch gradient of the mean alignment loss over all frames
    std::array<FeatureVector, kNumLevels> gw{};
    LevelProbs gb{};
    double total = 0.0;
    for (std::size_t k = 0; k < features.size(); ++k) {
      const ProbGrid probs = model.predict(features[k]);
      const LossResult loss = rer_loss(probs, targets[k], 0.0, 0.0, cfg);
      total += loss.loss;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        FeatureVector z{};
        for (int f = 0; f < kNumFeatures; ++f) {
          z[f] = (features[k][i][f] - params.norm.mean[f]) / params.norm.scale[f];
        }
        for (int l = 0; l < kNumLevels; ++l) {
          const double g = loss.logit_grads[i][l];
          gb[l] += g;
          for (int f = 0; f < kNumFeatures; ++f) gw[l][f] += g * z[f];
        }
      }
    }
    const double n = static_cast<double>(std::max<std::size_t>(features.size(), 1));
    losses.push_back(total / n);
    if (epoch == epochs) break;
    for (int l = 0; l < kNumLevels; ++l) {
      params.bias[l] -= lr * gb[l] / n;
      for (int f = 0; f < kNumFeatures; ++f) params.weights[l][f] -= lr * gw[l][f] / n;
    }
  }
  return losses;
}

// ---------------------------------------------------------------------------
// Objective

ObjectiveResult evaluate_objective(const EmphasisMap& em, const Scene& scene,
                                   const AccuracyOracle& oracle, double tau,
                                   const EmphasisTable& table) {
  const EncodeResult enc = encode_frame(scene.frame, apply_emphasis(em, table));
  ObjectiveResult out;
  out.acc_r = oracle.score_in(scene, scene.frame);
  out.acc_c = oracle.score_in(scene, enc.recon);
  out.feasible = std::abs(out.acc_c - out.acc_r) <= tau;
  out.emphasis_sum = emphasis_sum(em);
  out.bits = enc.total_bits;
  return out;
}

BruteForceResult brute_force_optimum(const Scene& scene, const AccuracyOracle& oracle, double tau,
                                     const EmphasisTable& table) {
  const MbGrid grid = partition(scene.frame);
  const int m = grid.count();
  if (m > kBruteForceMaxMbs) {
    throw InvalidInput("brute force limited to " + std::to_string(kBruteForceMaxMbs) + " macroblocks");
  }
  const LevelCache cache(scene.frame, table);
  BruteForceResult best;
  best.acc_r = oracle.score_in(scene, scene.frame);
  double best_gap = std::numeric_limits<double>::infinity();
  EmphasisMap em(grid.rows, grid.cols, 0);
  Frame padded;
  bool found = false;

  // Visits every map with the given remaining sum in lexicographic order.
  std::function<void(int, int)> visit = [&](int pos, int remaining) {
    if (found) return;
    if (pos == m) {
      if (remaining != 0) return;
      ++best.evaluated;
      cache.compose(em, padded);
      const double acc_c = oracle.score_in(scene, cache.crop_padded(padded));
      const double gap = std::abs(acc_c - best.acc_r);
      if (gap <= tau) {
        found = true;
        best.feasible = true;
        best.em = em;
        best.acc_c = acc_c;
        best_gap = gap;
      } else if (gap < best_gap) {
        best_gap = gap;
        best.em = em;
        best.acc_c = acc_c;
      }
      return;
    }
    const int slots_after = m - pos - 1;
    for (int level = 0; level < kNumLevels && level <= remaining; ++level) {
      if (remaining - level > slots_after * (kNumLevels - 1)) continue;
      em[static_cast<std::size_t>(pos)] = level;
      visit(pos + 1, remaining - level);
      if (found) return;
    }
    em[static_cast<std::size_t>(pos)] = 0;
  };

  for (int total = 0; total <= m * (kNumLevels - 1) && !found; ++total) visit(0, total);
  best.emphasis_sum = emphasis_sum(best.em);
  return best;
}

}  // namespace mbaq
