#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "birdxfer/config.hpp"
#include "birdxfer/eval.hpp"
#include "birdxfer/inference.hpp"

namespace birdxfer {

// The pipeline commands. Each validates the config, writes
// resolved_config.json into out_dir and returns what it produced. Progress
// goes to log (may be null).

struct PrepareResult {
  std::filesystem::path manifest;
  std::size_t written = 0;
  std::size_t skipped = 0;
};
// audio_manifest -> <out_dir>/spectrograms/*.png + <out_dir>/manifest.csv.
PrepareResult cmd_prepare(const RunConfig& config, std::ostream* log);

struct TrainBaseResult {
  std::filesystem::path checkpoint;
  std::filesystem::path report_path;
  TrainReport report;
};
TrainBaseResult cmd_train_base(const RunConfig& config, std::ostream* log);

struct TransferResult {
  std::filesystem::path report_path;
  KFoldReport report;
};
TransferResult cmd_transfer(const RunConfig& config, std::ostream* log);

// One JSON object per input: {path, label | labels, scores, windows}.
struct PredictedClip {
  std::string path;
  Prediction prediction;
  nlohmann::json json;
  std::string json_line;  // key order preserved
};
// Keeps a loaded checkpoint so many inputs can be scored.
class Predictor {
 public:
  Predictor(const std::filesystem::path& checkpoint, const RunConfig& config);
  PredictedClip predict(const std::filesystem::path& input);
  // .wav inputs become spectrograms with the checkpoint's constants.
  GraySpectrogram load_input(const std::filesystem::path& input) const;
  const LoadedModel& model() const { return model_; }
  LoadedModel& model() { return model_; }

 private:
  LoadedModel model_;
  RunConfig config_;
};
std::vector<PredictedClip> cmd_predict(const RunConfig& config, const std::filesystem::path& checkpoint,
                                       const std::vector<std::filesystem::path>& inputs, std::ostream* out);

struct EvaluateResult {
  std::filesystem::path report_path;
  double accuracy = 0.0;
  ConfusionMatrix matrix;
};
// Scores every record of config.manifest with the checkpoint.
EvaluateResult cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint, std::ostream* log);

// Loads config.manifest, merging config.negatives when set.
DatasetManifest load_stage_manifest(const RunConfig& config);

}  // namespace birdxfer
