#include "birdxfer/workflow.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "birdxfer/error.hpp"
#include "birdxfer/png_io.hpp"

namespace birdxfer {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string(what) + " is not set");
  if (!std::filesystem::exists(p)) throw IoError(std::string("missing ") + what + ": " + p.string());
}

}  // namespace

DatasetManifest load_stage_manifest(const RunConfig& config) {
  require_file(config.manifest, "data.manifest");
  DatasetManifest m = load_manifest(config.manifest);
  if (!config.negatives.empty()) {
    require_file(config.negatives, "data.negatives");
    m = merge_negatives(std::move(m), load_manifest(config.negatives));
  }
  return m;
}

PrepareResult cmd_prepare(const RunConfig& config, std::ostream* log) {
  config.validate();
  require_file(config.audio_manifest, "data.audio_manifest");
  const auto audio = load_manifest(config.audio_manifest);
  const auto png_dir = config.out_dir / "spectrograms";
  std::error_code ec;
  std::filesystem::create_directories(png_dir, ec);
  if (ec) throw IoError("cannot create " + png_dir.string() + ": " + ec.message());
  write_resolved_config(config, config.out_dir);

  // Output names are fixed up front so that workers never race on them.
  std::vector<std::filesystem::path> targets;
  std::set<std::string> used;
  for (const auto& r : audio.records) {
    std::string stem = std::filesystem::path(r.image_path).stem().string();
    std::string name = stem;
    for (int k = 1; used.count(name); ++k) name = stem + "_" + std::to_string(k);
    used.insert(name);
    targets.push_back(png_dir / (name + ".png"));
  }

  std::vector<char> ok(audio.records.size(), 0);
  std::vector<std::string> failures(audio.records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < audio.records.size(); i = next++) {
      try {
        const auto clip = load_canonical(audio.records[i].image_path);
        save_spectrogram_png(targets[i], make_spectrogram(clip, config.spectrogram), config.spectrogram);
        ok[i] = 1;
      } catch (const IoError& e) {
        // An unwritable output directory is fatal; unreadable inputs are not.
        if (!std::filesystem::exists(audio.records[i].image_path)) failures[i] = e.what();
        else throw;
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(audio.records.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = audio.records.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  PrepareResult result;
  std::vector<SampleRecord> rows;
  for (std::size_t i = 0; i < audio.records.size(); ++i) {
    if (ok[i]) {
      SampleRecord r = audio.records[i];
      r.image_path = targets[i].string();
      rows.push_back(std::move(r));
      ++result.written;
    } else {
      warn("skipping " + audio.records[i].image_path + ": " + failures[i]);
      ++result.skipped;
    }
  }
  result.manifest = config.out_dir / "manifest.csv";
  write_manifest(result.manifest, rows);
  if (log) *log << "prepared " << result.written << " spectrograms, skipped " << result.skipped << std::endl;
  return result;
}

TrainBaseResult cmd_train_base(const RunConfig& config, std::ostream* log) {
  config.validate();
  resolve_device(config.strict);
  const auto manifest = load_stage_manifest(config);
  if (manifest.num_classes() != config.expected_base_classes) {
    const std::string msg = "base manifest has " + std::to_string(manifest.num_classes()) + " classes, expected " +
                            std::to_string(config.expected_base_classes);
    if (config.strict) throw ValidationError(msg);
    warn(msg);
  }
  if (!config.pretrained.empty()) require_file(config.pretrained, "pretrained weight file");
  std::filesystem::create_directories(config.out_dir);
  write_resolved_config(config, config.out_dir);

  ModelConfig mc = config.model;
  mc.num_classes = manifest.num_classes();
  InitInfo info;
  std::optional<std::filesystem::path> pretrained;
  if (!config.pretrained.empty()) pretrained = config.pretrained;
  auto net = build_model<float>(mc, pretrained, config.seed, &info);

  const auto positives = manifest.positives();
  const auto negatives = manifest.negatives();
  const auto assignment = split_dataset(positives, config.base.split, config.seed);
  write_split_csv(config.out_dir / ("split_" + std::to_string(config.seed) + ".csv"), positives, assignment);
  const auto part = partition_stage(positives, negatives, assignment, config.validation_negative_ratio,
                                    config.base.negatives_per_epoch, config.seed, config.strict);

  TrainOptions opts;
  opts.checkpoint_path = config.out_dir / "base_best.ckpt";
  opts.metadata.class_names = manifest.class_names;
  opts.metadata.spectrogram = config.spectrogram;
  opts.metadata.augment = config.augment;
  opts.metadata.model = mc;
  opts.metadata.init = info;
  opts.metadata.stage = "base";
  opts.augment = config.augment;
  opts.seed = config.seed;
  opts.progress = log;
  opts.config_hash = std::to_string(config.spectrogram.hash());

  ImageStore images;
  TrainBaseResult result;
  result.report = train(net, part.data, config.schedule, opts, images);
  result.checkpoint = opts.checkpoint_path;
  result.report_path = config.out_dir / "train_report.json";
  write_json(result.report_path, result.report.to_json());
  return result;
}

TransferResult cmd_transfer(const RunConfig& config, std::ostream* log) {
  config.validate();
  resolve_device(config.strict);
  require_file(config.base_checkpoint, "base checkpoint");
  auto base = load_checkpoint(config.base_checkpoint);
  if (base.net.num_classes() != config.expected_base_classes) {
    const std::string msg = "base checkpoint head has " + std::to_string(base.net.num_classes()) +
                            " outputs, expected " + std::to_string(config.expected_base_classes);
    if (config.strict) throw ValidationError(msg);
    warn(msg);
  }
  check_spectrogram_config(base.meta, config.spectrogram, config.strict);
  const auto target = load_stage_manifest(config);
  std::filesystem::create_directories(config.out_dir);
  write_resolved_config(config, config.out_dir);

  KFoldOptions opts;
  opts.folds = config.folds;
  opts.seeds = config.fold_seeds;
  if (static_cast<int>(opts.seeds.size()) > opts.folds) opts.seeds.resize(opts.folds);
  opts.fractions = config.target.split;
  opts.disjoint = config.disjoint_folds;
  opts.negatives_per_epoch = config.target.negatives_per_epoch;
  opts.validation_negative_ratio = config.validation_negative_ratio;
  opts.schedule = config.schedule;
  opts.augment = config.augment;
  opts.out_dir = config.out_dir;
  opts.progress = log;
  opts.strict = config.strict;
  opts.config_hash = std::to_string(config.spectrogram.hash());

  ImageStore images;
  TransferResult result;
  result.report = kfold_evaluate(base.net, base.meta, target, opts, images);
  result.report_path = config.out_dir / "kfold_report.json";
  write_json(result.report_path, result.report.to_json());
  write_matrix_csv(config.out_dir / "averaged_matrix.csv", result.report.averaged, result.report.class_names);
  render_matrix_png(config.out_dir / "averaged_matrix.png", result.report.averaged);
  if (log) {
    *log << "mean_accuracy=" << result.report.mean_accuracy << " std_accuracy=" << result.report.std_accuracy
         << std::endl;
  }
  return result;
}

Predictor::Predictor(const std::filesystem::path& checkpoint, const RunConfig& config)
    : model_(load_checkpoint(checkpoint)), config_(config) {
  check_spectrogram_config(model_.meta, config_.spectrogram, config_.strict);
}

GraySpectrogram Predictor::load_input(const std::filesystem::path& input) const {
  const auto ext = lower_ext(input);
  if (ext == ".png") {
    auto image = load_spectrogram_png(input);
    if (image.config_hash != model_.meta.spectrogram.hash()) {
      const std::string msg = input.string() + " was built with different spectrogram constants than the checkpoint";
      if (config_.strict) throw ValidationError(msg);
      warn(msg);
    }
    return image;
  }
  return make_spectrogram(load_canonical(input), model_.meta.spectrogram);
}

PredictedClip Predictor::predict(const std::filesystem::path& input) {
  PredictedClip out;
  out.path = input.string();
  const auto image = load_input(input);
  const int window = model_.meta.augment.crop_cols;
  out.prediction = predict_clip(model_.net, image, window, window / 2);
  const auto& names = model_.meta.class_names;
  nlohmann::ordered_json j;
  j["path"] = out.path;
  if (config_.threshold) {
    std::vector<std::string> labels;
    for (int i : classify_multi(out.prediction.scores, *config_.threshold, static_cast<int>(names.size()) - 1))
      labels.push_back(names[i]);
    j["labels"] = labels;
  } else {
    j["label"] = names[classify(out.prediction.scores)];
  }
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < names.size(); ++c) scores[names[c]] = out.prediction.scores[c];
  j["scores"] = scores;
  j["windows"] = out.prediction.window_origins.size();
  out.json = nlohmann::json::parse(j.dump());
  out.json_line = j.dump();
  return out;
}

std::vector<PredictedClip> cmd_predict(const RunConfig& config, const std::filesystem::path& checkpoint,
                                       const std::vector<std::filesystem::path>& inputs, std::ostream* out) {
  config.validate();
  resolve_device(config.strict);
  require_file(checkpoint, "checkpoint");
  Predictor predictor(checkpoint, config);
  std::vector<PredictedClip> results;
  for (const auto& in : inputs) {
    require_file(in, "input");
    results.push_back(predictor.predict(in));
    if (out) *out << results.back().json_line << std::endl;
  }
  return results;
}

EvaluateResult cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint, std::ostream* log) {
  config.validate();
  resolve_device(config.strict);
  require_file(checkpoint, "checkpoint");
  Predictor predictor(checkpoint, config);
  const auto manifest = relabel(load_stage_manifest(config), predictor.model().meta.class_names);
  std::filesystem::create_directories(config.out_dir);
  write_resolved_config(config, config.out_dir);

  std::vector<int> preds, truths;
  for (const auto& r : manifest.records) {
    const auto clip = predictor.predict(r.image_path);
    preds.push_back(classify(clip.prediction.scores));
    truths.push_back(r.label_index);
  }
  EvaluateResult result;
  result.accuracy = accuracy(preds, truths);
  result.matrix = confusion_matrix(preds, truths, manifest.num_classes());
  nlohmann::json j;
  j["checkpoint"] = checkpoint.string();
  j["class_names"] = manifest.class_names;
  j["samples"] = truths.size();
  j["accuracy"] = result.accuracy;
  j["matrix"] = {{"counts", result.matrix.counts}, {"normalized", result.matrix.row_normalized()}};
  result.report_path = config.out_dir / "evaluate_report.json";
  write_json(result.report_path, j);
  write_matrix_csv(config.out_dir / "evaluate_matrix.csv", result.matrix, manifest.class_names);
  if (log) *log << "accuracy=" << result.accuracy << " samples=" << truths.size() << std::endl;
  return result;
}

}  // namespace birdxfer
