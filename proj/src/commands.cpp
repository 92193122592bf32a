#include "mbaq/commands.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "mbaq/baselines.hpp"
#include "mbaq/heatmap.hpp"
#include "mbaq/io.hpp"
#include "mbaq/quality.hpp"
#include "mbaq/rng.hpp"

namespace mbaq {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const TrainingError*>(&e)) return kExitTraining;
  if (dynamic_cast<const InvalidConfig*>(&e) || dynamic_cast<const InvalidInput*>(&e) ||
      dynamic_cast<const PlacementError*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return kExitIo;
  return kExitFailure;
}

namespace {

constexpr std::uint64_t kTrainerStream = 0x7a11ULL;

TrainerConfig trainer_for_run(const RunConfig& cfg) {
  TrainerConfig t = cfg.trainer;
  t.seed = derive_seed(cfg.seed, kTrainerStream);
  return t;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

Json ids_to_json(const std::vector<std::size_t>& ids) {
  Json arr = Json::array();
  for (std::size_t id : ids) arr.push_back(id);
  return arr;
}

std::vector<int> frame_indices(const std::vector<CorpusFrame>& frames) {
  std::vector<int> out;
  out.reserve(frames.size());
  for (const CorpusFrame& f : frames) out.push_back(f.frame);
  return out;
}

SweepRow make_row(const PreparedFrame& pf, int frame, const char* method, std::int64_t bits,
                  const Frame& recon, double acc_c, double tau) {
  SweepRow row;
  row.scene_id = pf.scene_id;
  row.frame = frame;
  row.method = method;
  row.bits = bits;
  row.acc_r = pf.acc_r;
  row.acc_c = acc_c;
  row.feasible = std::abs(acc_c - pf.acc_r) <= tau;
  row.mean_ssim = mean(per_mb_ssim(pf.scene.frame, recon));
  row.psnr = psnr(pf.scene.frame, recon);
  return row;
}

}  // namespace

std::vector<PreparedFrame> prepare_corpus(const std::vector<CorpusFrame>& frames,
                                          const AccuracyOracle& oracle, const TrainerConfig& cfg) {
  std::vector<Scene> scenes;
  std::vector<std::size_t> ids;
  scenes.reserve(frames.size());
  for (const CorpusFrame& f : frames) {
    scenes.push_back(f.scene);
    ids.push_back(f.scene_id);
  }
  return prepare_frames(scenes, ids, oracle, cfg);
}

std::vector<CorpusFrame> cmd_gen(const RunConfig& cfg) {
  std::vector<CorpusFrame> frames = generate_corpus(cfg);
  write_corpus(frames, cfg.out_dir);
  return frames;
}

Json cmd_pet(const RunConfig& cfg, const std::filesystem::path& corpus_dir) {
  const std::vector<CorpusFrame> frames = load_corpus(corpus_dir);
  Json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["pct_roi"] = cfg.trainer.pct_roi;
  doc["pct_bg"] = cfg.trainer.pct_bg;
  doc["scenes"] = Json::array();
  std::size_t last = static_cast<std::size_t>(-1);
  for (const CorpusFrame& f : frames) {
    if (f.scene_id == last) continue;
    last = f.scene_id;
    const Frame low = lowest_quality_encode(f.scene.frame);
    const MbSsimGrid grid = per_mb_ssim(f.scene.frame, low);
    const PetThresholds thr = proxy_emphasis_threshold(grid, cfg.trainer.pct_roi, cfg.trainer.pct_bg);
    Json entry = thresholds_to_json(thr);
    entry["scene_id"] = f.scene_id;
    entry["frame"] = f.frame;
    entry["ssim_low"] = ssim_grid_to_json(grid);
    doc["scenes"].push_back(entry);
  }
  ensure_dir(cfg.out_dir);
  write_json_file(doc, cfg.out_dir / "pet.json");
  return doc;
}

TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& corpus_dir) {
  cfg.validate();
  if (cfg.trainer.max_epochs == 0) throw InvalidConfig("no training performed: max_epochs is 0");
  const std::vector<CorpusFrame> frames = load_corpus(corpus_dir);
  const std::size_t n_scenes = frames.back().scene_id + 1;
  TrainOutcome out;
  out.split = split_scenes(n_scenes, cfg.seed);
  const TrainerConfig tcfg = trainer_for_run(cfg);
  const auto oracle = make_oracle(cfg);
  const auto train_frames = prepare_corpus(select_scenes(frames, out.split.train), *oracle, tcfg);
  const auto val_frames = prepare_corpus(select_scenes(frames, out.split.validation), *oracle, tcfg);
  if (train_frames.empty()) throw InvalidConfig("training split is empty");

  ensure_dir(cfg.out_dir);
  try {
    out.result = train(out.model, train_frames, val_frames, *oracle, tcfg);
  } catch (const TrainingError& e) {
    write_text_file(format_epoch_log_csv(e.log()), cfg.out_dir / "epoch_log.csv");
    throw;
  }
  write_text_file(format_epoch_log_csv(out.result.log), cfg.out_dir / "epoch_log.csv");
  write_json_file(model_to_json(out.model), cfg.out_dir / "model.json");
  Json info;
  info["schema_version"] = kReportSchemaVersion;
  info["epochs_run"] = out.result.epochs_run;
  info["converged"] = out.result.converged;
  info["final_val_abs_dacc"] = out.result.log.empty() ? 0.0 : out.result.log.back().val_abs_dacc;
  info["split"] = {{"train", ids_to_json(out.split.train)},
                   {"validation", ids_to_json(out.split.validation)},
                   {"test", ids_to_json(out.split.test)}};
  info["config"] = run_config_to_json(cfg);
  write_json_file(info, cfg.out_dir / "train.json");
  return out;
}

MethodEvaluation evaluate_methods(const std::vector<PreparedFrame>& frames,
                                  const std::vector<int>& indices, const EAModel* model,
                                  const RunConfig& cfg, const AccuracyOracle& oracle,
                                  bool with_baselines) {
  if (indices.size() != frames.size()) throw InvalidInput("one frame index per frame required");
  const double tau = cfg.trainer.tau;
  MethodEvaluation out;
  std::map<std::string, std::vector<QpMap>> maps;
  std::vector<std::string> order;
  auto keep_map = [&](const char* method, QpMap qp) {
    if (!maps.count(method)) order.push_back(method);
    maps[method].push_back(std::move(qp));
  };

  // last prediction per scene: (frame index it was made on, map)
  std::map<std::size_t, std::pair<int, EmphasisMap>> cached;
  Frame padded;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const PreparedFrame& pf = frames[k];
    const int fidx = indices[k];
    if (model) {
      auto it = cached.find(pf.scene_id);
      const bool stale = it == cached.end() || fidx - it->second.first >= cfg.interval ||
                         fidx < it->second.first || !it->second.second.same_shape(pf.regions);
      if (stale) {
        cached[pf.scene_id] = {fidx, argmax_map(model->predict(pf.features))};
      }
      const EmphasisMap& em = cached[pf.scene_id].second;
      const std::int64_t bits = pf.cache->compose(em, padded);
      const Frame recon = pf.cache->crop_padded(padded);
      SweepRow row = make_row(pf, fidx, method_tag(Method::kEmphasis), bits, recon,
                              oracle.score_in(pf.scene, recon), tau);
      row.emphasis_sum = emphasis_sum(em);
      out.rows.push_back(std::move(row));
      out.learned_maps.push_back(em);
      keep_map(method_tag(Method::kEmphasis), apply_emphasis(em));
    }
    if (!with_baselines) continue;
    if (cfg.baselines.uniform) {
      EmphasisMap em;
      EncodeResult enc;
      double acc = 0.0;
      for (int level = 0; level < kNumLevels; ++level) {
        em = uniform_emphasis(pf.grid, level);
        enc = pf.cache->encode(em);
        acc = oracle.score_in(pf.scene, enc.recon);
        if (std::abs(acc - pf.acc_r) <= tau) break;
      }
      SweepRow row = make_row(pf, fidx, method_tag(Method::kUniform), enc.total_bits, enc.recon, acc, tau);
      row.emphasis_sum = emphasis_sum(em);
      out.rows.push_back(std::move(row));
      keep_map(method_tag(Method::kUniform), apply_emphasis(em));
    }
    if (cfg.baselines.binary_roi) {
      const BaselineResult r = evaluate_qp_map(
          Method::kBinaryRoi,
          binary_roi_assignment(pf.regions, cfg.baselines.binary_qp_high, cfg.baselines.binary_qp_low),
          pf.scene, oracle, tau);
      out.rows.push_back(make_row(pf, fidx, method_tag(r.method), r.bits, r.recon, r.acc_c, tau));
      keep_map(method_tag(r.method), r.qp_map);
    }
    if (cfg.baselines.variance_aq) {
      const BaselineResult r = variance_aq_search(pf.scene, oracle, tau, cfg.variance_aq);
      out.rows.push_back(make_row(pf, fidx, method_tag(r.method), r.bits, r.recon, r.acc_c, tau));
      keep_map(method_tag(r.method), r.qp_map);
    }
  }
  for (const std::string& m : order) out.qp_maps.emplace_back(m, std::move(maps[m]));
  return out;
}

SweepOutcome cmd_sweep(const RunConfig& cfg, const std::filesystem::path& corpus_dir,
                       const std::filesystem::path& model_path) {
  cfg.validate();
  if (model_path.empty() || !std::filesystem::is_regular_file(model_path)) {
    throw InvalidConfig("model not found: " + model_path.string());
  }
  const LinearEAModel model = model_from_json(read_json_file(model_path));
  const std::vector<CorpusFrame> all = load_corpus(corpus_dir);
  const std::size_t n_scenes = all.back().scene_id + 1;
  const Split split = split_scenes(n_scenes, cfg.seed);
  const std::vector<CorpusFrame> frames =
      cfg.sweep_split == SweepSplit::kAll ? all : select_scenes(all, split.test);
  const auto oracle = make_oracle(cfg);
  const TrainerConfig tcfg = trainer_for_run(cfg);
  const auto prepared = prepare_corpus(frames, *oracle, tcfg);
  MethodEvaluation eval = evaluate_methods(prepared, frame_indices(frames), &model, cfg, *oracle, true);

  SweepOutcome out;
  out.rows = std::move(eval.rows);
  out.aggregates = aggregate_rows(out.rows);

  ensure_dir(cfg.out_dir);
  write_text_file(format_sweep_csv(out.rows, out.aggregates), cfg.out_dir / "sweep.csv");
  for (const auto& [method, maps] : eval.qp_maps) {
    write_qp_matrix(maps, cfg.out_dir / ("qp_" + method + ".txt"));
  }
  ensure_dir(cfg.out_dir / "maps");
  for (std::size_t k = 0; k < eval.learned_maps.size(); ++k) {
    write_json_file(emphasis_map_to_json(eval.learned_maps[k]),
                    cfg.out_dir / "maps" / (frames[k].stem() + "_emphasis.json"));
  }

  Json summary;
  summary["schema_version"] = kReportSchemaVersion;
  summary["tau"] = cfg.trainer.tau;
  summary["interval"] = cfg.interval;
  summary["split"] = cfg.sweep_split == SweepSplit::kAll ? "all" : "test";
  std::vector<std::size_t> ids;
  for (const CorpusFrame& f : frames) {
    if (ids.empty() || ids.back() != f.scene_id) ids.push_back(f.scene_id);
  }
  summary["scene_ids"] = ids_to_json(ids);
  summary["methods"] = Json::array();
  for (const MethodAggregate& a : out.aggregates) summary["methods"].push_back(aggregate_to_json(a));
  summary["labels"] = {{"emphasis", "learned emphasis assignment"},
                       {"uniform", "uniform QP search"},
                       {"binary_roi", "binary RoI"},
                       {"variance_aq", "emulated AQ"}};
  const MethodAggregate* uniform = nullptr;
  for (const MethodAggregate& a : out.aggregates) {
    if (a.method == method_tag(Method::kUniform)) uniform = &a;
  }
  if (uniform && uniform->total_bits > 0) {
    Json savings = Json::object();
    for (const MethodAggregate& a : out.aggregates) {
      savings[a.method] = 1.0 - static_cast<double>(a.total_bits) / static_cast<double>(uniform->total_bits);
    }
    summary["savings_vs_uniform"] = savings;
  }
  Json thresholds = Json::array();
  std::size_t last = static_cast<std::size_t>(-1);
  for (const PreparedFrame& pf : prepared) {
    if (pf.scene_id == last) continue;
    last = pf.scene_id;
    Json t = thresholds_to_json(pf.thresholds);
    t["scene_id"] = pf.scene_id;
    thresholds.push_back(t);
  }
  summary["thresholds"] = thresholds;
  write_json_file(summary, cfg.out_dir / "summary.json");
  return out;
}

void cmd_heatmap(const std::filesystem::path& map_path, const std::filesystem::path& out_path) {
  write_ppm(render_heatmap(read_map_file(map_path)), out_path);
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::filesystem::path& corpus_dir) {
  cfg.validate();
  if (cfg.trainer.max_epochs == 0) throw InvalidConfig("no training performed: max_epochs is 0");
  const std::vector<CorpusFrame> all = load_corpus(corpus_dir);
  const std::size_t n_scenes = all.back().scene_id + 1;
  const Split split = split_scenes(n_scenes, cfg.seed);
  const auto oracle = make_oracle(cfg);
  const TrainerConfig base = trainer_for_run(cfg);
  const auto train_frames = prepare_corpus(select_scenes(all, split.train), *oracle, base);
  const auto val_frames = prepare_corpus(select_scenes(all, split.validation), *oracle, base);
  const std::vector<CorpusFrame> eval_corpus =
      cfg.sweep_split == SweepSplit::kAll ? all : select_scenes(all, split.test);
  const auto eval_frames = prepare_corpus(eval_corpus, *oracle, base);
  const std::vector<int> indices = frame_indices(eval_corpus);

  RunConfig uniform_only = cfg;
  uniform_only.baselines.binary_roi = false;
  uniform_only.baselines.variance_aq = false;
  uniform_only.baselines.uniform = true;
  const auto uniform_rows = evaluate_methods(eval_frames, indices, nullptr, uniform_only, *oracle, true).rows;
  const double uniform_bits = aggregate_rows(uniform_rows).front().mean_bits;

  std::vector<AblationRow> rows;
  for (const ProxyMode mode : {ProxyMode::kRegionAware, ProxyMode::kUniformDownward}) {
    for (const double decay : kAblationDecays) {
      TrainerConfig tcfg = base;
      tcfg.proxy_mode = mode;
      tcfg.p_decay = decay;
      LinearEAModel model;
      const TrainResult result = train(model, train_frames, val_frames, *oracle, tcfg);
      for (int interval = 1; interval <= kAblationMaxInterval; ++interval) {
        RunConfig run = cfg;
        run.interval = interval;
        const auto eval = evaluate_methods(eval_frames, indices, &model, run, *oracle, false);
        const MethodAggregate agg = aggregate_rows(eval.rows).front();
        AblationRow row;
        row.variant = mode == ProxyMode::kRegionAware ? "rer" : "no_rer";
        row.p_decay = decay;
        row.interval = interval;
        row.mean_bits = agg.mean_bits;
        row.normalized_bits = uniform_bits > 0 ? agg.mean_bits / uniform_bits : 0.0;
        row.mean_abs_dacc = agg.mean_abs_dacc;
        row.feasible_fraction = agg.feasible_fraction;
        row.epochs = result.epochs_run;
        row.converged = result.converged;
        rows.push_back(row);
      }
    }
  }
  ensure_dir(cfg.out_dir);
  write_text_file(format_ablation_csv(rows), cfg.out_dir / "ablation.csv");
  return rows;
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,p_decay,interval,mean_bits,normalized_bits,mean_abs_dacc,feasible_fraction,epochs,"
         "converged\n";
  for (const AblationRow& r : rows) {
    out << r.variant << ',' << format_double(r.p_decay) << ',' << r.interval << ','
        << format_double(r.mean_bits) << ',' << format_double(r.normalized_bits) << ','
        << format_double(r.mean_abs_dacc) << ',' << format_double(r.feasible_fraction) << ','
        << r.epochs << ',' << (r.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

Json cmd_encode(const std::filesystem::path& frame_path, const std::filesystem::path& map_path,
                const std::filesystem::path& out_dir) {
  const Frame frame = read_pgm(frame_path);
  const MapFile map = read_map_file(map_path);
  const EncodeResult enc = encode_frame(frame, map.as_qp());
  ensure_dir(out_dir);
  write_pgm(enc.recon, out_dir / "recon.pgm");
  Json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["width"] = frame.width();
  doc["height"] = frame.height();
  doc["total_bits"] = enc.total_bits;
  doc["psnr_db"] = psnr(frame, enc.recon);
  const MbSsimGrid ssim = per_mb_ssim(frame, enc.recon);
  doc["mean_ssim"] = mean(ssim);
  Json bits;
  bits["rows"] = enc.mb_bits.rows();
  bits["cols"] = enc.mb_bits.cols();
  bits["bits"] = Json::array();
  for (std::int64_t b : enc.mb_bits) bits["bits"].push_back(b);
  doc["mb_bits"] = bits;
  doc["ssim"] = ssim_grid_to_json(ssim);
  write_json_file(doc, out_dir / "encode.json");
  return doc;
}

void cmd_qpmatrix(const std::vector<std::filesystem::path>& map_paths,
                  const std::filesystem::path& out_path) {
  std::vector<QpMap> maps;
  for (const auto& p : map_paths) maps.push_back(read_map_file(p).as_qp());
  write_qp_matrix(maps, out_path);
}

}  // namespace mbaq
