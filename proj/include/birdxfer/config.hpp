#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "birdxfer/augment.hpp"
#include "birdxfer/model.hpp"
#include "birdxfer/spectrogram.hpp"
#include "birdxfer/trainer.hpp"

namespace birdxfer {

nlohmann::json to_json(const SpectrogramConfig& c);
nlohmann::json to_json(const AugmentConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainingSchedule& c);

// Missing keys keep their defaults; unknown keys are ignored.
SpectrogramConfig spectrogram_config_from_json(const nlohmann::json& j);
AugmentConfig augment_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainingSchedule schedule_from_json(const nlohmann::json& j);

// Per-stage data plumbing.
struct StageConfig {
  std::size_t negatives_per_epoch = 0;
  std::vector<double> split;
};

// Everything a command needs, after merging defaults, the config file and
// command-line flags (in that order).
struct RunConfig {
  // paths
  std::filesystem::path manifest;         // spectrogram manifest (image_path,species,role)
  std::filesystem::path negatives;        // optional separate negatives manifest
  std::filesystem::path audio_manifest;   // prepare input
  std::filesystem::path pretrained;       // converted ImageNet backbone archive
  std::filesystem::path base_checkpoint;  // transfer input
  std::filesystem::path out_dir = "out";

  SpectrogramConfig spectrogram{};
  AugmentConfig augment{};
  ModelConfig model{};
  TrainingSchedule schedule{};

  StageConfig base{1407, {0.8, 0.2}};
  StageConfig target{175, {0.72, 0.18, 0.10}};
  double validation_negative_ratio = 0.5;
  int expected_base_classes = 47;

  int folds = 5;
  std::vector<std::uint64_t> fold_seeds{1, 2, 3, 4, 5};
  bool disjoint_folds = false;

  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;
  bool verbose = true;
  std::optional<double> threshold;
  std::string device = "cpu";

  // Applies one dotted key (e.g. "schedule.initial_lr") from its textual
  // value. Unknown keys throw ConfigError.
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();

  void validate() const;
  nlohmann::json to_json() const;
};

// Reads BIRDXFER_DEVICE; only "cpu" is available, anything else falls back
// with a warning (an error in strict mode).
std::string resolve_device(bool strict);

void write_resolved_config(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace birdxfer
